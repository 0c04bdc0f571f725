#pragma once

#include "rankfeat/kernels.hpp"

namespace rankfeat::kernels::detail {

const KernelTable& scalar_kernels();
#if defined(RANKFEAT_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

}  // namespace rankfeat::kernels::detail
