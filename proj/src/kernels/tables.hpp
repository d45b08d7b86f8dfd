#pragma once

#include "floqscat/kernels.hpp"

namespace floqscat::simd::detail {

extern const KernelTable kScalarTable;
#if defined(FLOQSCAT_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(FLOQSCAT_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

}  // namespace floqscat::simd::detail
