#include "floqscat/expm.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

#include "floqscat/error.hpp"
#include "floqscat/parallel.hpp"

namespace floqscat {

std::string_view to_string(ExpMethod m) noexcept {
  switch (m) {
    case ExpMethod::Auto: return "auto";
    case ExpMethod::Dense: return "dense";
    case ExpMethod::Taylor: return "taylor";
    case ExpMethod::Krylov: return "krylov";
  }
  return "auto";
}

ExpMethod exp_method_from_string(std::string_view s) {
  if (s == "auto") return ExpMethod::Auto;
  if (s == "dense") return ExpMethod::Dense;
  if (s == "taylor") return ExpMethod::Taylor;
  if (s == "krylov") return ExpMethod::Krylov;
  fail(ErrorCode::InvalidArgument, "unknown exponential method '" + std::string(s) + "'");
}

int taylor_degree(double x, double tol) {
  if (x == 0.0) return 0;
  double term = x;  // x^{m+1}/(m+1)! for m = 0
  const double ex = std::exp(x);
  int m = 0;
  while (term * ex > tol && m < 60) {
    ++m;
    term *= x / (m + 1);
  }
  return m;
}

namespace {

bool is_real(const Mat& h) { return h.imag().cwiseAbs().maxCoeff() == 0.0; }

ExpStats taylor(const SpMat& h, double dt, Vec& v, const ExpOptions& opt, double hnorm) {
  const auto& k = simd::kernels();
  const double x_total = hnorm * std::abs(dt);
  const int nsub = std::max(1, static_cast<int>(std::ceil(x_total)));
  if (nsub > opt.max_substeps) {
    fail(ErrorCode::StepBudgetExceeded, "Taylor substeps " + std::to_string(nsub) + " exceed budget");
  }
  const double sub = dt / nsub;
  const int m = taylor_degree(hnorm * std::abs(sub), opt.tol);
  const auto n = static_cast<std::size_t>(v.size());
  Vec term(v.size()), next(v.size());
  ExpStats st;
  st.used = ExpMethod::Taylor;
  st.substeps = nsub;
  for (int s = 0; s < nsub; ++s) {
    term = v;
    for (int j = 1; j <= m; ++j) {
      k.csr_matvec(csr_view(h), cplx(0.0, -sub / j), term.data(), next.data());
      term.swap(next);
      k.axpy(n, cplx(1.0, 0.0), term.data(), v.data());
      ++st.matvecs;
    }
  }
  const double xs = hnorm * std::abs(sub);
  double bound = 1.0;
  for (int j = 1; j <= m + 1; ++j) bound *= xs / j;
  st.error_estimate = nsub * bound * std::exp(xs);
  return st;
}

// One Lanczos attempt for exp(-i dt H) v. Returns false when the residual
// estimate stays above tol at the maximal subspace dimension.
bool lanczos_step(const SpMat& h, double dt, Vec& v, const ExpOptions& opt, ExpStats& st) {
  const auto& k = simd::kernels();
  const auto n = static_cast<std::size_t>(v.size());
  const double beta0 = std::sqrt(k.norm2(n, v.data()));
  if (beta0 == 0.0) return true;
  const int mmax = static_cast<int>(std::min<Index>(opt.krylov_max_dim, v.size()));
  Mat basis(v.size(), mmax + 1);
  basis.col(0) = v / beta0;
  std::vector<double> alpha, beta;
  Vec w(v.size());
  for (int j = 0; j < mmax; ++j) {
    k.csr_matvec(csr_view(h), cplx(1.0, 0.0), basis.col(j).data(), w.data());
    ++st.matvecs;
    // Full reorthogonalization; the basis is small.
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const cplx c = k.dot(n, basis.col(i).data(), w.data());
        k.axpy(n, -c, basis.col(i).data(), w.data());
        if (pass == 0 && i == j) alpha.push_back(c.real());
      }
    }
    const double b = std::sqrt(k.norm2(n, w.data()));
    const int m = j + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::MatrixXd& z = es.eigenvectors();
    Vec y(m);
    for (int i = 0; i < m; ++i) {
      cplx acc = 0.0;
      for (int l = 0; l < m; ++l) acc += z(i, l) * std::exp(cplx(0.0, -dt * es.eigenvalues()(l))) * z(0, l);
      y(i) = acc;
    }
    const bool breakdown = b <= 1e-13 * (std::abs(alpha[j]) + 1.0);
    const double est = b * std::abs(y(m - 1));
    if (breakdown || est <= opt.tol) {
      v = beta0 * (basis.leftCols(m) * y);
      st.error_estimate += breakdown ? 0.0 : est;
      return true;
    }
    beta.push_back(b);
    basis.col(j + 1) = w / b;
  }
  return false;
}

ExpStats krylov(const SpMat& h, double dt, Vec& v, const ExpOptions& opt, double hnorm) {
  ExpStats st;
  st.used = ExpMethod::Krylov;
  int nsub = std::max(1, static_cast<int>(std::ceil(hnorm * std::abs(dt) / 10.0)));
  for (;;) {
    if (nsub > opt.max_substeps) {
      fail(ErrorCode::StepBudgetExceeded, "Krylov substeps exceed budget (" + std::to_string(opt.max_substeps) + ")");
    }
    Vec trial = v;
    ExpStats attempt;
    attempt.used = ExpMethod::Krylov;
    bool ok = true;
    for (int s = 0; s < nsub && ok; ++s) ok = lanczos_step(h, dt / nsub, trial, opt, attempt);
    st.matvecs += attempt.matvecs;
    if (ok) {
      v = trial;
      st.substeps = nsub;
      st.error_estimate = attempt.error_estimate;
      return st;
    }
    nsub *= 2;
  }
}

ExpStats dense(const SpMat& h, double dt, Vec& v) {
  const Mat u = expm_hermitian(Mat(h), dt);
  v = u * v;
  ExpStats st;
  st.used = ExpMethod::Dense;
  st.substeps = 1;
  return st;
}

ExpMethod choose(const SpMat& h, double dt, const ExpOptions& opt, double hnorm) {
  if (opt.method != ExpMethod::Auto) return opt.method;
  if (hnorm * std::abs(dt) <= 1.0) return ExpMethod::Taylor;
  return h.rows() <= opt.dense_threshold ? ExpMethod::Dense : ExpMethod::Krylov;
}

}  // namespace

Mat expm_hermitian(const Mat& h, double dt) {
  if (is_real(h)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.real());
    if (es.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "expm_hermitian: real eigensolver failed");
    const Eigen::MatrixXd& q = es.eigenvectors();
    Vec ph(q.cols());
    for (Index i = 0; i < q.cols(); ++i) ph(i) = std::exp(cplx(0.0, -dt * es.eigenvalues()(i)));
    const Mat qc = q.cast<cplx>();
    return qc * ph.asDiagonal() * q.transpose().cast<cplx>();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "expm_hermitian: eigensolver failed");
  Vec ph(h.cols());
  for (Index i = 0; i < h.cols(); ++i) ph(i) = std::exp(cplx(0.0, -dt * es.eigenvalues()(i)));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

ExpStats expm_apply(const SpMat& h, double dt, Vec& v, const ExpOptions& opt) {
  if (dt == 0.0) return {};
  const double hnorm = norm_inf(h);
  switch (choose(h, dt, opt, hnorm)) {
    case ExpMethod::Dense: return dense(h, dt, v);
    case ExpMethod::Krylov: return krylov(h, dt, v, opt, hnorm);
    default: return taylor(h, dt, v, opt, hnorm);
  }
}

void expm_apply_block(const SpMat& h, double dt, Mat& block, const ExpOptions& opt) {
  if (dt == 0.0) return;
  const double hnorm = norm_inf(h);
  const ExpMethod m = choose(h, dt, opt, hnorm);
  if (m == ExpMethod::Dense) {
    block = expm_hermitian(Mat(h), dt) * block;
    return;
  }
  if (m == ExpMethod::Taylor && block.cols() > 1) {
    // same truncation as the vector path, with whole rows of the block per nonzero
    const int nsub = std::max(1, static_cast<int>(std::ceil(hnorm * std::abs(dt))));
    if (nsub > opt.max_substeps) {
      fail(ErrorCode::StepBudgetExceeded, "Taylor substeps " + std::to_string(nsub) + " exceed budget");
    }
    const double sub = dt / nsub;
    const int deg = taylor_degree(hnorm * std::abs(sub), opt.tol);
    // row-major copies: y_i = sum_k h_ik x_k becomes one axpy over whole rows per nonzero
    const auto& kern = simd::kernels();
    const simd::CsrView hv = csr_view(h);
    const Index n = block.rows();
    const auto w = static_cast<std::size_t>(block.cols());
    using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat acc = block, term(n, block.cols()), next(n, block.cols());
    for (int s = 0; s < nsub; ++s) {
      term = acc;
      for (int j = 1; j <= deg; ++j) {
        next.setZero();
        const cplx c(0.0, -sub / j);
        for (Index i = 0; i < n; ++i) {
          for (std::int32_t k = hv.row_ptr[i]; k < hv.row_ptr[i + 1]; ++k) {
            kern.axpy(w, c * hv.values[k], term.row(hv.col_idx[k]).data(), next.row(i).data());
          }
        }
        term.swap(next);
        acc += term;
      }
    }
    block = acc;
    return;
  }
  parallel_for(block.cols(), [&](std::ptrdiff_t j) {
    Vec col = block.col(j);
    if (m == ExpMethod::Krylov) {
      krylov(h, dt, col, opt, hnorm);
    } else {
      taylor(h, dt, col, opt, hnorm);
    }
    block.col(j) = col;
  });
}

}  // namespace floqscat
