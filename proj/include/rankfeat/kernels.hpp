#pragma once

// Dense double-precision inner loops used by the spectral routines.
//
// Every kernel has a portable scalar reference and, where the CPU allows, an
// AVX2/FMA variant. The variant is chosen once at first use from the CPU
// feature flags; tests compare the two tables against each other.

#include <cstddef>
#include <optional>
#include <string_view>

namespace rankfeat::kernels {

enum class Isa {
  kScalar,
  kAvx2,
};

std::string_view to_string(Isa isa);

// Row-major matrices are passed as (pointer, rows, cols) with a dense stride
// of `cols`.
struct KernelTable {
  Isa isa;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scal)(double alpha, double* x, std::size_t n);
  // Plane rotation of two rows:
  //   x' = c * x + s * y
  //   y' = c * y - s * x
  void (*rot)(double* x, double* y, std::size_t n, double c, double s);
  // y = A x, A is rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* y);
  // y = A^T x, A is rows x cols, y has length cols
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y);
  // A += alpha * u v^T
  void (*ger)(double* a, std::size_t rows, std::size_t cols, double alpha,
              const double* u, const double* v);
  // C = A B with A (m x k), B (k x n), C (m x n)
  void (*gemm)(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
};

const KernelTable& scalar_table();

/// The AVX2 table, or nullopt when it was not compiled in or the running CPU
/// lacks AVX2/FMA.
std::optional<const KernelTable*> avx2_table();

/// Table used by the library. Resolved from CPU features on first call.
const KernelTable& active();

/// Pins the active table. Returns false when the ISA is unavailable.
bool select(Isa isa);

/// Restores the CPU-feature-based choice.
void reset_selection();

}  // namespace rankfeat::kernels
