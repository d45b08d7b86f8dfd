#pragma once

#include <Eigen/Sparse>

#include "floqscat/kernels.hpp"
#include "floqscat/types.hpp"

namespace floqscat {

/// Row-major compressed storage; int indices so the SIMD kernels can walk it directly.
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor, int>;

inline simd::CsrView csr_view(const SpMat& a) {
  return {a.rows(), a.outerIndexPtr(), a.innerIndexPtr(), a.valuePtr()};
}

/// y = alpha * A x through the active kernel table. A must be compressed.
void spmv(const SpMat& a, cplx alpha, const Vec& x, Vec& y);

/// Max absolute row sum.
double norm_inf(const SpMat& a);

/// max |A - A^*| over entries.
double hermitian_defect(const SpMat& a);
double hermitian_defect(const Mat& a);

/// Spectral norm of a dense matrix (largest singular value).
double op_norm(const Mat& a);

/// ||U^* U - I||_max
double unitarity_defect(const Mat& u);

}  // namespace floqscat
