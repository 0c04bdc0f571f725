#include <atomic>

#include "tables.hpp"

namespace rankfeat::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(RANKFEAT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* detect() {
#if defined(RANKFEAT_HAVE_AVX2)
  if (cpu_has_avx2()) return &detail::avx2_kernels();
#endif
  return &detail::scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_table() { return detail::scalar_kernels(); }

std::optional<const KernelTable*> avx2_table() {
#if defined(RANKFEAT_HAVE_AVX2)
  if (cpu_has_avx2()) return &detail::avx2_kernels();
#endif
  return std::nullopt;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      current().store(&detail::scalar_kernels(), std::memory_order_release);
      return true;
    case Isa::kAvx2:
      if (auto t = avx2_table()) {
        current().store(*t, std::memory_order_release);
        return true;
      }
      return false;
  }
  return false;
}

void reset_selection() { current().store(detect(), std::memory_order_release); }

}  // namespace rankfeat::kernels
