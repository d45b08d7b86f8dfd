#include "floqscat/sparse.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace floqscat {

void spmv(const SpMat& a, cplx alpha, const Vec& x, Vec& y) {
  y.resize(a.rows());
  simd::kernels().csr_matvec(csr_view(a), alpha, x.data(), y.data());
}

double norm_inf(const SpMat& a) {
  double best = 0.0;
  for (int i = 0; i < a.outerSize(); ++i) {
    double s = 0.0;
    for (SpMat::InnerIterator it(a, i); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

double hermitian_defect(const SpMat& a) {
  const SpMat adj = a.adjoint();
  const SpMat diff = a - adj;
  double m = 0.0;
  for (int i = 0; i < diff.outerSize(); ++i)
    for (SpMat::InnerIterator it(diff, i); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

double hermitian_defect(const Mat& a) { return (a - a.adjoint()).cwiseAbs().maxCoeff(); }

double op_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

double unitarity_defect(const Mat& u) {
  return (u.adjoint() * u - Mat::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace floqscat
