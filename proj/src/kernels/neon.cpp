// aarch64 only: one complex double per 128-bit register.
#include <arm_neon.h>

#include "tables.hpp"

namespace floqscat::simd::detail {
namespace {

inline const double* as_doubles(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* as_doubles(cplx* p) { return reinterpret_cast<double*>(p); }

// [ar*br - ai*bi, ar*bi + ai*br]
inline float64x2_t cmul(float64x2_t a, float64x2_t b) {
  const float64x2_t ar = vdupq_laneq_f64(a, 0);
  const float64x2_t ai = vdupq_laneq_f64(a, 1);
  const float64x2_t bs = vextq_f64(b, b, 1);                       // [bi, br]
  const float64x2_t sign = {-1.0, 1.0};
  return vfmaq_f64(vmulq_f64(ar, b), vmulq_f64(ai, bs), sign);
}

void csr_matvec(const CsrView& a, cplx alpha, const cplx* x, cplx* y) {
  for (std::ptrdiff_t i = 0; i < a.rows; ++i) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::int32_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      acc = vaddq_f64(acc, cmul(vld1q_f64(as_doubles(a.values + k)), vld1q_f64(as_doubles(x + a.col_idx[k]))));
    }
    y[i] = alpha * cplx(vgetq_lane_f64(acc, 0), vgetq_lane_f64(acc, 1));
  }
}

void axpy(std::size_t n, cplx a, const cplx* x, cplx* y) {
  const float64x2_t av = {a.real(), a.imag()};
  for (std::size_t i = 0; i < n; ++i) {
    vst1q_f64(as_doubles(y + i), vaddq_f64(vld1q_f64(as_doubles(y + i)), cmul(av, vld1q_f64(as_doubles(x + i)))));
  }
}

double norm2(std::size_t n, const cplx* x) {
  float64x2_t acc = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t v = vld1q_f64(as_doubles(x + i));
    acc = vfmaq_f64(acc, v, v);
  }
  return vaddvq_f64(acc);
}

cplx dot(std::size_t n, const cplx* x, const cplx* y) {
  float64x2_t acc_re = vdupq_n_f64(0.0);
  float64x2_t acc_im = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t xv = vld1q_f64(as_doubles(x + i));
    const float64x2_t yv = vld1q_f64(as_doubles(y + i));
    acc_re = vfmaq_f64(acc_re, xv, yv);
    acc_im = vfmaq_f64(acc_im, xv, vextq_f64(yv, yv, 1));
  }
  return {vaddvq_f64(acc_re), vgetq_lane_f64(acc_im, 0) - vgetq_lane_f64(acc_im, 1)};
}

void diag_mul(std::size_t n, const cplx* d, cplx* x) {
  for (std::size_t i = 0; i < n; ++i) {
    vst1q_f64(as_doubles(x + i), cmul(vld1q_f64(as_doubles(d + i)), vld1q_f64(as_doubles(x + i))));
  }
}

}  // namespace

const KernelTable kNeonTable{Isa::Neon, csr_matvec, axpy, norm2, dot, diag_mul};

}  // namespace floqscat::simd::detail
