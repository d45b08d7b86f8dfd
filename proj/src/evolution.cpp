#include "floqscat/evolution.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

#include "floqscat/error.hpp"

namespace floqscat {

void FunctionGenerator::assemble(double t, SpMat& out) const {
  const Mat m = fn_(t);
  if (m.rows() != n_ || m.cols() != n_) fail(ErrorCode::DimensionMismatch, "generator callback returned wrong size");
  out = m.sparseView(1.0, 0.0);
  out.makeCompressed();
}

std::string_view to_string(StepRule r) noexcept { return r == StepRule::Midpoint ? "midpoint" : "averaged"; }

StepRule step_rule_from_string(std::string_view s) {
  if (s == "midpoint") return StepRule::Midpoint;
  if (s == "averaged") return StepRule::Averaged;
  fail(ErrorCode::InvalidArgument, "unknown step rule '" + std::string(s) + "'");
}

DrivenHamiltonian::DrivenHamiltonian(std::shared_ptr<const FiniteLattice> lat, StaticMagneticPotential alpha,
                                     StaticElectricPotential p, double tau)
    : lat_(std::move(lat)), alpha_(std::move(alpha)), p_(std::move(p)), tau_(tau), pattern_(*lat_) {
  if (!(tau_ > 0.0)) fail(ErrorCode::InvalidArgument, "period must be positive");
  alpha_edges_ = alpha_.on(*lat_);
  diag0_ = schrodinger(*lat_, alpha_, p_).diagonal().real();
}

DrivenHamiltonian& DrivenHamiltonian::with_magnetic(TimeField delta) {
  if (delta.kind() != FieldKind::MagneticEdge || delta.sites() != alpha_edges_.size()) {
    fail(ErrorCode::PotentialShapeMismatch, "magnetic field must live on the truncated edges");
  }
  delta_ = std::move(delta);
  return *this;
}

DrivenHamiltonian& DrivenHamiltonian::with_potential(TimeField v) {
  if (v.kind() != FieldKind::ElectricVertex || v.sites() != dim()) {
    fail(ErrorCode::PotentialShapeMismatch, "electric field must live on the truncated vertices");
  }
  v_ = std::move(v);
  return *this;
}

DrivenHamiltonian& DrivenHamiltonian::with_q(TimeField q, const PrimitiveOptions& opt) {
  if (q.kind() != FieldKind::ElectricVertex || q.sites() != dim()) {
    fail(ErrorCode::PotentialShapeMismatch, "electric field must live on the truncated vertices");
  }
  Q_ = PrimitiveQ::of(q, opt);
  q_ = std::move(q);
  return *this;
}

RVec DrivenHamiltonian::edge_phases(double t) const {
  RVec ph = alpha_edges_;
  if (delta_ && !delta_->is_zero()) {
    for (Index e = 0; e < ph.size(); ++e) ph(e) += (*delta_)(e, t);
  }
  return ph;
}

void DrivenHamiltonian::fill(double t_edges, const RVec& extra_diag, SpMat& out) const {
  pattern_.fill(edge_phases(t_edges), diag0_ + extra_diag, out);
}

void DrivenHamiltonian::assemble(double t, SpMat& out) const {
  RVec extra = RVec::Zero(dim());
  if (v_ && !v_->is_zero()) {
    for (Index i = 0; i < dim(); ++i) extra(i) += (*v_)(i, t);
  }
  if (q_ && !q_->is_zero()) {
    for (Index i = 0; i < dim(); ++i) extra(i) += (*q_)(i, t);
  }
  fill(t, extra, out);
}

void DrivenHamiltonian::assemble_step(double t0, double t1, SpMat& out) const {
  const double mid = 0.5 * (t0 + t1);
  if (rule_ == StepRule::Midpoint || !q_ || q_->is_zero() || t1 == t0) {
    assemble(mid, out);
    return;
  }
  RVec extra = RVec::Zero(dim());
  if (v_ && !v_->is_zero()) {
    for (Index i = 0; i < dim(); ++i) extra(i) += (*v_)(i, mid);
  }
  for (Index i = 0; i < dim(); ++i) extra(i) += ((*Q_)(i, t1) - (*Q_)(i, t0)) / (t1 - t0);
  fill(mid, extra, out);
}

SpMat DrivenHamiltonian::comparison() const { return schrodinger(*lat_, alpha_, p_); }

std::pair<double, double> DrivenHamiltonian::sample_checks(int samples) const {
  double per = 0.0, herm = 0.0;
  SpMat a, b;
  for (int j = 0; j < samples; ++j) {
    const double t = tau_ * (j + 0.37) / samples;
    assemble(t, a);
    assemble(t + tau_, b);
    per = std::max(per, Mat(a - b).cwiseAbs().maxCoeff());
    herm = std::max(herm, hermitian_defect(a));
  }
  return {per, herm};
}

// ---------------------------------------------------------------------------

namespace {

void check_step(const SpMat& h, const StepOptions& opt, double t) {
  if (opt.check_hermitian && hermitian_defect(h) > opt.hermitian_tol) {
    fail(ErrorCode::NonHermitianSample, "generator is not Hermitian at t = " + std::to_string(t));
  }
}

}  // namespace

Vec propagate(const Generator& h, const Vec& f, double s, double t, int n_steps, const StepOptions& opt) {
  if (n_steps < 1) fail(ErrorCode::InvalidArgument, "n_steps must be >= 1");
  if (f.size() != h.dim()) fail(ErrorCode::DimensionMismatch, "state size does not match the generator");
  Vec v = f;
  if (t == s) return v;
  const double dt = (t - s) / n_steps;
  SpMat H;
  for (int k = 0; k < n_steps; ++k) {
    const double t0 = s + k * dt;
    const double t1 = k + 1 == n_steps ? t : s + (k + 1) * dt;
    h.assemble_step(t0, t1, H);
    check_step(H, opt, t0);
    expm_apply(H, t1 - t0, v, opt.exp);
  }
  return v;
}

void propagate_block(const Generator& h, Mat& block, double s, double t, int n_steps, const StepOptions& opt) {
  if (n_steps < 1) fail(ErrorCode::InvalidArgument, "n_steps must be >= 1");
  if (block.rows() != h.dim()) fail(ErrorCode::DimensionMismatch, "block rows do not match the generator");
  if (t == s) return;
  const double dt = (t - s) / n_steps;
  SpMat H;
  for (int k = 0; k < n_steps; ++k) {
    const double t0 = s + k * dt;
    const double t1 = k + 1 == n_steps ? t : s + (k + 1) * dt;
    h.assemble_step(t0, t1, H);
    check_step(H, opt, t0);
    expm_apply_block(H, t1 - t0, block, opt.exp);
  }
}

nlohmann::json Propagator::to_json() const {
  nlohmann::json j = {{"method", method == Method::Stepping ? "stepping" : "dyson"},
                      {"s", s},
                      {"t", t},
                      {"dim", U.rows()},
                      {"unitarity_defect", unitarity_defect}};
  if (method == Method::Stepping) {
    j["steps"] = steps;
  } else {
    j["order"] = order;
    j["nodes"] = nodes;
    j["A"] = A;
    j["tail_bound"] = tail_bound;
    j["duhamel_bound"] = duhamel_bound;
  }
  return j;
}

Propagator propagator(const Generator& h, double s, double t, int n_steps, const StepOptions& opt) {
  Propagator p;
  p.s = s;
  p.t = t;
  p.steps = n_steps;
  p.U = Mat::Identity(h.dim(), h.dim());
  propagate_block(h, p.U, s, t, n_steps, opt);
  p.unitarity_defect = unitarity_defect(p.U);
  return p;
}

double dyson_tail(double A, int order) {
  // sum_{j>J} A^j/j! = e^A - sum_{j<=J} A^j/j!, summed forward to avoid cancellation
  double term = 1.0;
  for (int j = 1; j <= order; ++j) term *= A / j;
  double sum = 0.0;
  for (int j = order + 1; j < order + 400; ++j) {
    term *= A / j;
    sum += term;
    if (term <= 1e-18 * sum) break;
  }
  return sum;
}

int dyson_order_for(double A, double tol) {
  int J = 0;
  while (dyson_tail(A, J) > tol) {
    if (++J > 400) fail(ErrorCode::QuadratureBudgetExceeded, "Dyson order needed exceeds 400");
  }
  return J;
}

namespace {

struct DysonCore {
  Mat evecs;
  RVec evals;
  Mat E(double r) const {
    Vec ph(evals.size());
    for (Index i = 0; i < evals.size(); ++i) ph(i) = std::exp(cplx(0.0, -r * evals(i)));
    return evecs * ph.asDiagonal() * evecs.adjoint();
  }
};

// returns sum_{j=1..J} (-i)^j U~_j(t) for the interaction-picture integrand
Mat dyson_sum(const DysonCore& core, const std::function<Mat(double)>& V, double s, double t, int order, int n,
              double& A) {
  const Index N = core.evals.size();
  const double h = (t - s) / n;
  std::vector<Mat> VI(static_cast<std::size_t>(n + 1));
  RVec vnorm(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double sig = s + k * h;
    const Mat v = V(sig);
    if (v.rows() != N || v.cols() != N) fail(ErrorCode::DimensionMismatch, "V(t) has the wrong size");
    const Mat e = core.E(sig - s);
    VI[static_cast<std::size_t>(k)] = e.adjoint() * v * e;
    vnorm(k) = op_norm(v);
  }
  // Simpson (plus 3/8 for an odd count) for A
  auto simpson_total = [&](auto&& g) {
    if (n % 2 == 0) {
      double acc = g(0) + g(n);
      for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * g(k);
      return acc * h / 3.0;
    }
    double acc = n > 3 ? g(0) + g(n - 3) : 0.0;
    for (int k = 1; k < n - 3; ++k) acc += (k % 2 ? 4.0 : 2.0) * g(k);
    return acc * h / 3.0 + 3.0 * h / 8.0 * (g(n - 3) + 3.0 * g(n - 2) + 3.0 * g(n - 1) + g(n));
  };
  A = std::abs(simpson_total([&](int k) { return vnorm(k); }));

  std::vector<Mat> prev(static_cast<std::size_t>(n + 1), Mat::Identity(N, N));
  std::vector<Mat> g(static_cast<std::size_t>(n + 1));
  std::vector<Mat> cur(static_cast<std::size_t>(n + 1));
  std::vector<Mat> even(static_cast<std::size_t>(n + 1));
  Mat total = Mat::Zero(N, N);
  cplx phase = 1.0;
  for (int j = 1; j <= order; ++j) {
    for (int k = 0; k <= n; ++k) g[k] = VI[k] * prev[k];
    cur[0] = Mat::Zero(N, N);
    even[0] = cur[0];
    for (int k = 1; k <= n; ++k) {
      if (k % 2 == 0) {
        even[k] = even[k - 2] + (h / 3.0) * (g[k - 2] + 4.0 * g[k - 1] + g[k]);
        cur[k] = even[k];
      } else if (k == 1) {
        cur[k] = (h / 12.0) * (5.0 * g[0] + 8.0 * g[1] - g[2]);
      } else {
        cur[k] = even[k - 3] + (3.0 * h / 8.0) * (g[k - 3] + 3.0 * g[k - 2] + 3.0 * g[k - 1] + g[k]);
      }
    }
    phase *= cplx(0.0, -1.0);
    total += phase * cur[n];
    std::swap(prev, cur);
  }
  return total;
}

}  // namespace

Propagator dyson_propagator(const Mat& h0, const std::function<Mat(double)>& V, double s, double t, int order,
                            const DysonOptions& opt) {
  if (order < 0) fail(ErrorCode::InvalidArgument, "Dyson order must be >= 0");
  if (h0.rows() != h0.cols()) fail(ErrorCode::DimensionMismatch, "h0 must be square");
  DysonCore core;
  Eigen::SelfAdjointEigenSolver<Mat> es(h0);
  if (es.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "h0 eigendecomposition failed");
  core.evecs = es.eigenvectors();
  core.evals = es.eigenvalues();
  const Index N = h0.rows();

  Propagator p;
  p.method = Propagator::Method::Dyson;
  p.s = s;
  p.t = t;
  p.order = order;
  const Mat U0 = core.E(t - s);
  if (t == s || order == 0) {
    p.U = U0;
    if (t != s) {
      int n = opt.intervals > 0 ? opt.intervals : 64;
      dyson_sum(core, V, s, t, 0, n, p.A);
      p.nodes = n + 1;
    }
  } else if (opt.intervals > 0) {
    if (opt.intervals < 2) fail(ErrorCode::InvalidArgument, "Dyson quadrature needs >= 2 intervals");
    p.U = U0 * (Mat::Identity(N, N) + dyson_sum(core, V, s, t, order, opt.intervals, p.A));
    p.nodes = opt.intervals + 1;
  } else {
    int n = 64;
    Mat prev = dyson_sum(core, V, s, t, order, n, p.A);
    for (;;) {
      if (2 * n > opt.max_intervals) {
        fail(ErrorCode::QuadratureBudgetExceeded,
             "Dyson quadrature did not reach " + std::to_string(opt.quad_tol) + " within " +
                 std::to_string(opt.max_intervals) + " intervals");
      }
      n *= 2;
      Mat next = dyson_sum(core, V, s, t, order, n, p.A);
      const double change = (next - prev).cwiseAbs().maxCoeff();
      prev = std::move(next);
      if (change <= opt.quad_tol) break;
    }
    p.U = U0 * (Mat::Identity(N, N) + prev);
    p.nodes = n + 1;
  }
  p.tail_bound = dyson_tail(p.A, order);
  p.duhamel_bound = std::min(p.A, 1.0) * std::exp(p.A);
  p.unitarity_defect = unitarity_defect(p.U);
  return p;
}

Propagator monodromy(const Generator& h, double t0, int n_steps, const StepOptions& opt) {
  return propagator(h, t0, t0 + h.period(), n_steps, opt);
}

double conjugacy_defect(const Generator& h, double t0, int n_steps, const StepOptions& opt) {
  const double tau = h.period();
  const double dt = tau / n_steps;
  const long k = std::lround(t0 / dt);
  if (std::abs(k * dt - t0) > 1e-12 * tau) {
    fail(ErrorCode::InvalidArgument, "t0 must lie on the step grid tau / n_steps");
  }
  const Mat M = monodromy(h, t0, n_steps, opt).U;
  const Mat Ut = k == 0 ? Mat::Identity(h.dim(), h.dim()) : propagator(h, 0.0, t0, static_cast<int>(std::labs(k)), opt).U;
  const Mat Utau = propagator(h, 0.0, tau, n_steps, opt).U;
  return (M - Ut * Utau * Ut.adjoint()).cwiseAbs().maxCoeff();
}

double shift_defect(const Generator& h, double t0, int n_steps, const StepOptions& opt) {
  const Mat a = monodromy(h, t0, n_steps, opt).U;
  const Mat b = monodromy(h, t0 + h.period(), n_steps, opt).U;
  return (a - b).cwiseAbs().maxCoeff();
}

double fold_quasienergy(cplx mu, double tau) {
  const double omega = kTwoPi / tau;
  double x = -std::arg(mu);  // [-pi, pi)
  if (x < 0) x += kTwoPi;
  double lam = x / tau;
  if (lam >= omega * (1.0 - 1e-12)) lam = 0.0;
  return lam;
}

double circular_distance(double a, double b, double omega) {
  double d = std::fmod(std::abs(a - b), omega);
  return std::min(d, omega - d);
}

nlohmann::json QuasienergySpectrum::to_json() const {
  std::vector<double> lam(lambda.data(), lambda.data() + lambda.size());
  std::vector<double> phases;
  for (Index i = 0; i < mu.size(); ++i) phases.push_back(std::arg(mu(i)));
  return {{"tau", tau},
          {"omega", omega},
          {"quasienergies", lam},
          {"eigenphases", phases},
          {"distinct", distinct},
          {"multiplicity", multiplicity},
          {"unitarity_defect", unitarity_defect}};
}

QuasienergySpectrum quasienergy_spectrum(const Mat& M, double tau, const QuasienergyOptions& opt) {
  if (M.rows() != M.cols()) fail(ErrorCode::DimensionMismatch, "monodromy must be square");
  QuasienergySpectrum q;
  q.tau = tau;
  q.omega = kTwoPi / tau;
  q.unitarity_defect = unitarity_defect(M);
  if (q.unitarity_defect > opt.unitarity_tol) {
    fail(ErrorCode::NonUnitaryInput, "unitarity defect " + std::to_string(q.unitarity_defect));
  }
  Eigen::ComplexSchur<Mat> cs(M, opt.eigenvectors);
  if (cs.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "Schur decomposition failed");
  const Index n = M.rows();
  Vec mu = cs.matrixT().diagonal();
  RVec lam(n);
  for (Index i = 0; i < n; ++i) lam(i) = fold_quasienergy(mu(i), tau);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return lam(a) < lam(b); });
  q.mu.resize(n);
  q.lambda.resize(n);
  if (opt.eigenvectors) q.vectors = Mat(n, n);
  for (Index i = 0; i < n; ++i) {
    const Index j = order[static_cast<std::size_t>(i)];
    q.mu(i) = mu(j);
    q.lambda(i) = lam(j);
    if (opt.eigenvectors) q.vectors->col(i) = cs.matrixU().col(j);
  }
  for (Index i = 0; i < n; ++i) {
    if (!q.distinct.empty() && q.lambda(i) - q.distinct.back() <= opt.cluster_tol) {
      ++q.multiplicity.back();
    } else {
      q.distinct.push_back(q.lambda(i));
      q.multiplicity.push_back(1);
    }
  }
  if (q.distinct.size() > 1 && q.omega - q.distinct.back() <= opt.cluster_tol) {
    q.multiplicity.front() += q.multiplicity.back();
    q.distinct.pop_back();
    q.multiplicity.pop_back();
  }
  return q;
}

double floquet_mode_check(const Generator& h, double lambda, const Vec& psi0, int n_steps, int samples, double tol,
                          const StepOptions& opt) {
  if (samples < 1 || n_steps % samples != 0) {
    fail(ErrorCode::InvalidArgument, "n_steps must be a positive multiple of samples");
  }
  const double tau = h.period();
  const cplx ev = std::exp(cplx(0.0, -tau * lambda));
  const double nrm = psi0.norm();
  if (nrm == 0.0) fail(ErrorCode::InvalidArgument, "zero vector");
  const double r0 = (propagate(h, psi0, 0.0, tau, n_steps, opt) - ev * psi0).norm() / nrm;
  if (r0 > tol) fail(ErrorCode::NotAnEigenpair, "initial residual " + std::to_string(r0));
  Vec u = psi0;  // U(t_k, 0) psi0
  const int per = n_steps / samples;
  double worst = r0;
  for (int k = 0; k < samples; ++k) {
    const double tk = tau * k / samples;
    if (k > 0) u = propagate(h, u, tau * (k - 1) / samples, tk, per, opt);
    const Vec psi = std::exp(cplx(0.0, tk * lambda)) * u;
    const Vec Mpsi = propagate(h, psi, tk, tk + tau, n_steps, opt);
    worst = std::max(worst, (Mpsi - ev * psi).norm() / nrm);
  }
  return worst;
}

void save_matrix(const Mat& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  const std::int64_t dims[2] = {m.rows(), m.cols()};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(cplx) * m.size()));
}

Mat load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot read " + path);
  std::int64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || dims[0] < 0 || dims[1] < 0) fail(ErrorCode::MalformedSpec, "bad matrix header in " + path);
  Mat m(dims[0], dims[1]);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(cplx) * m.size()));
  if (!in) fail(ErrorCode::MalformedSpec, "truncated matrix file " + path);
  return m;
}

}  // namespace floqscat
