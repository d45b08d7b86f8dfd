// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "tables.hpp"

namespace floqscat::simd::detail {
namespace {

inline const double* as_doubles(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* as_doubles(cplx* p) { return reinterpret_cast<double*>(p); }

// (a * b) for two packed complex pairs [a0r a0i a1r a1i].
inline __m256d cmul(__m256d a, __m256d b) {
  const __m256d ar = _mm256_movedup_pd(a);
  const __m256d ai = _mm256_permute_pd(a, 0xF);
  const __m256d bs = _mm256_permute_pd(b, 0x5);
  return _mm256_fmaddsub_pd(ar, b, _mm256_mul_pd(ai, bs));
}

inline cplx hsum_pair(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  alignas(16) double out[2];
  _mm_store_pd(out, s);
  return {out[0], out[1]};
}

void csr_matvec(const CsrView& a, cplx alpha, const cplx* x, cplx* y) {
  for (std::ptrdiff_t i = 0; i < a.rows; ++i) {
    __m256d acc_r = _mm256_setzero_pd();  // [sum vr*xr, sum vr*xi] per lane
    __m256d acc_i = _mm256_setzero_pd();  // [sum vi*xi, sum vi*xr] per lane
    std::int32_t k = a.row_ptr[i];
    const std::int32_t end = a.row_ptr[i + 1];
    for (; k + 1 < end; k += 2) {
      const __m256d v = _mm256_loadu_pd(as_doubles(a.values + k));
      const __m128d x0 = _mm_loadu_pd(as_doubles(x + a.col_idx[k]));
      const __m128d x1 = _mm_loadu_pd(as_doubles(x + a.col_idx[k + 1]));
      const __m256d xv = _mm256_set_m128d(x1, x0);
      acc_r = _mm256_fmadd_pd(_mm256_movedup_pd(v), xv, acc_r);
      acc_i = _mm256_fmadd_pd(_mm256_permute_pd(v, 0xF), _mm256_permute_pd(xv, 0x5), acc_i);
    }
    __m256d acc = _mm256_addsub_pd(acc_r, acc_i);
    cplx sum = hsum_pair(acc);
    if (k < end) {
      const cplx v = a.values[k];
      const cplx xv = x[a.col_idx[k]];
      sum += cplx(v.real() * xv.real() - v.imag() * xv.imag(), v.real() * xv.imag() + v.imag() * xv.real());
    }
    y[i] = alpha * sum;
  }
}

void axpy(std::size_t n, cplx a, const cplx* x, cplx* y) {
  const __m256d ar = _mm256_set1_pd(a.real());
  const __m256d ai = _mm256_set1_pd(a.imag());
  std::size_t i = 0;
  for (; i + 1 < n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(as_doubles(x + i));
    const __m256d yv = _mm256_loadu_pd(as_doubles(y + i));
    const __m256d prod = _mm256_fmaddsub_pd(ar, xv, _mm256_mul_pd(ai, _mm256_permute_pd(xv, 0x5)));
    _mm256_storeu_pd(as_doubles(y + i), _mm256_add_pd(yv, prod));
  }
  for (; i < n; ++i) {
    y[i] += cplx(a.real() * x[i].real() - a.imag() * x[i].imag(),
                 a.real() * x[i].imag() + a.imag() * x[i].real());
  }
}

double norm2(std::size_t n, const cplx* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 1 < n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(as_doubles(x + i));
    acc = _mm256_fmadd_pd(xv, xv, acc);
  }
  const cplx pair = hsum_pair(acc);
  double s = pair.real() + pair.imag();
  for (; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

cplx dot(std::size_t n, const cplx* x, const cplx* y) {
  __m256d acc_re = _mm256_setzero_pd();  // [xr*yr, xi*yi]
  __m256d acc_im = _mm256_setzero_pd();  // [xr*yi, xi*yr]
  std::size_t i = 0;
  for (; i + 1 < n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(as_doubles(x + i));
    const __m256d yv = _mm256_loadu_pd(as_doubles(y + i));
    acc_re = _mm256_fmadd_pd(xv, yv, acc_re);
    acc_im = _mm256_fmadd_pd(xv, _mm256_permute_pd(yv, 0x5), acc_im);
  }
  const cplx re_pair = hsum_pair(acc_re);
  const cplx im_pair = hsum_pair(acc_im);
  double re = re_pair.real() + re_pair.imag();
  double im = im_pair.real() - im_pair.imag();
  for (; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

void diag_mul(std::size_t n, const cplx* d, cplx* x) {
  std::size_t i = 0;
  for (; i + 1 < n; i += 2) {
    const __m256d dv = _mm256_loadu_pd(as_doubles(d + i));
    const __m256d xv = _mm256_loadu_pd(as_doubles(x + i));
    _mm256_storeu_pd(as_doubles(x + i), cmul(dv, xv));
  }
  for (; i < n; ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    x[i] = cplx(d[i].real() * xr - d[i].imag() * xi, d[i].real() * xi + d[i].imag() * xr);
  }
}

}  // namespace

const KernelTable kAvx2Table{Isa::Avx2, csr_matvec, axpy, norm2, dot, diag_mul};

}  // namespace floqscat::simd::detail
