#include "tables.hpp"

namespace floqscat::simd::detail {
namespace {

void csr_matvec(const CsrView& a, cplx alpha, const cplx* x, cplx* y) {
  for (std::ptrdiff_t i = 0; i < a.rows; ++i) {
    double re = 0.0;
    double im = 0.0;
    for (std::int32_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const cplx v = a.values[k];
      const cplx xv = x[a.col_idx[k]];
      re += v.real() * xv.real() - v.imag() * xv.imag();
      im += v.real() * xv.imag() + v.imag() * xv.real();
    }
    y[i] = alpha * cplx(re, im);
  }
}

void axpy(std::size_t n, cplx a, const cplx* x, cplx* y) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += cplx(a.real() * x[i].real() - a.imag() * x[i].imag(),
                 a.real() * x[i].imag() + a.imag() * x[i].real());
  }
}

double norm2(std::size_t n, const cplx* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

cplx dot(std::size_t n, const cplx* x, const cplx* y) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

void diag_mul(std::size_t n, const cplx* d, cplx* x) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    x[i] = cplx(d[i].real() * xr - d[i].imag() * xi, d[i].real() * xi + d[i].imag() * xr);
  }
}

}  // namespace

const KernelTable kScalarTable{Isa::Scalar, csr_matvec, axpy, norm2, dot, diag_mul};

}  // namespace floqscat::simd::detail
