#include "floqscat/scattering.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "floqscat/error.hpp"

namespace floqscat {

Vec gaussian_packet(const FiniteLattice& lat, const std::vector<double>& center, double sigma,
                    const std::vector<double>& k0) {
  const RMat& pos = lat.positions();
  if (static_cast<Index>(center.size()) != pos.cols() || static_cast<Index>(k0.size()) != pos.cols()) {
    fail(ErrorCode::DimensionMismatch, "packet center and momentum need one entry per embedding coordinate");
  }
  if (!(sigma > 0.0)) fail(ErrorCode::InvalidArgument, "packet width must be positive");
  Vec f(lat.size());
  for (Index i = 0; i < lat.size(); ++i) {
    double r2 = 0.0, kx = 0.0;
    for (Index j = 0; j < pos.cols(); ++j) {
      const double d = pos(i, j) - center[static_cast<std::size_t>(j)];
      r2 += d * d;
      kx += k0[static_cast<std::size_t>(j)] * pos(i, j);
    }
    f(i) = std::exp(cplx(-r2 / (4.0 * sigma * sigma), kx));
  }
  return f / f.norm();
}

double participation_ratio(const Vec& v) {
  const double s2 = v.squaredNorm();
  const double s4 = v.cwiseAbs2().squaredNorm();
  if (s4 == 0.0) return 0.0;
  return s2 * s2 / (static_cast<double>(v.size()) * s4);
}

Mat ac_projector(const Mat& comparison, const BandStructure& bands, double pr_min, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(comparison);
  if (es.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "comparison eigendecomposition failed");
  const Index n = comparison.rows();
  Mat P = Mat::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const double e = es.eigenvalues()(k);
    bool in_band = false;
    for (const auto& [a, b] : bands.intervals) in_band = in_band || (e >= a - tol && e <= b + tol);
    for (std::size_t s = 0; s < bands.flat.size(); ++s) {
      if (bands.flat[s] && std::abs(e - bands.flat_value[s]) <= 1e-6) in_band = false;
    }
    const Vec v = es.eigenvectors().col(k);
    if (in_band && participation_ratio(v) >= pr_min) P += v * v.adjoint();
  }
  return P;
}

Mat monodromy_ac_projector(const Mat& M, double pr_min) {
  Eigen::ComplexSchur<Mat> cs(M);
  if (cs.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "Schur decomposition failed");
  const Index n = M.rows();
  Mat P = Mat::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const Vec v = cs.matrixU().col(k);
    if (participation_ratio(v) >= pr_min) P += v * v.adjoint();
  }
  return P;
}

nlohmann::json ScatteringReport::to_json() const {
  return {{"scenario", scenario},
          {"comparison", comparison},
          {"tau", tau},
          {"times", times},
          {"norms", norms},
          {"decrements", decrements},
          {"isometry_defects", isometry},
          {"intertwining_defects", intertwining},
          {"boundary_mass", boundary},
          {"adjoint_decrements", adjoint_decrements},
          {"adjoint_isometry_defect", adjoint_isometry},
          {"reference_norm", reference_norm},
          {"final_decrement", final_decrement()},
          {"converged", converged},
          {"contaminated", contaminated},
          {"verdict", verdict}};
}

std::string ScatteringReport::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "n,t,norm,decrement,isometry_defect,intertwining_defect,boundary_mass,adjoint_decrement\n";
  auto cell = [&os](const std::vector<double>& v, std::size_t i) {
    if (i < v.size()) os << v[i];
  };
  for (std::size_t n = 0; n < times.size(); ++n) {
    os << n << ',' << times[n] << ',';
    cell(norms, n);
    os << ',';
    cell(decrements, n);
    os << ',';
    cell(isometry, n);
    os << ',';
    cell(intertwining, n);
    os << ',';
    cell(boundary, n);
    os << ',';
    cell(adjoint_decrements, n);
    os << '\n';
  }
  return os.str();
}

namespace {

void eig_comparison(const SpMat& comparison, Mat& vecs, RVec& vals) {
  const Mat c = Mat(comparison);
  if (c.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<RMat> es(c.real());
    if (es.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "comparison eigendecomposition failed");
    vecs = es.eigenvectors().cast<cplx>();
    vals = es.eigenvalues();
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(c);
    if (es.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "comparison eigendecomposition failed");
    vecs = es.eigenvectors();
    vals = es.eigenvalues();
  }
}

void check_normalized(const Vec& f) {
  if (std::abs(f.norm() - 1.0) > 1e-10) {
    fail(ErrorCode::NonNormalizedInput, "initial state has norm " + std::to_string(f.norm()));
  }
}

int shell_of(const FiniteLattice& lat, int shell) { return shell > 0 ? shell : std::max(1, lat.radius() / 10); }

void finish(ScatteringReport& r, double conv_tol, double cap, bool strict, double final_dec) {
  for (double b : r.boundary) r.contaminated = r.contaminated || b > cap;
  r.converged = final_dec <= conv_tol;
  r.verdict = r.contaminated ? "boundary-contaminated" : (r.converged ? "pass" : "not-converged");
  if (r.contaminated && strict) {
    const double worst = *std::max_element(r.boundary.begin(), r.boundary.end());
    fail(ErrorCode::BoundaryContamination,
         "boundary mass " + std::to_string(worst) + " exceeds cap " + std::to_string(cap) + "; rerun with larger L");
  }
}

}  // namespace

ScatteringOperators ScatteringOperators::build(const Generator& h, const SpMat& comparison, int steps_per_period,
                                               const StepOptions& opt) {
  return from_monodromy(monodromy(h, 0.0, steps_per_period, opt).U, comparison, h.period());
}

ScatteringOperators ScatteringOperators::from_monodromy(Mat M, const SpMat& comparison, double tau) {
  if (M.rows() != comparison.rows()) fail(ErrorCode::DimensionMismatch, "monodromy and comparison differ in size");
  ScatteringOperators ops;
  ops.tau = tau;
  ops.M = std::move(M);
  eig_comparison(comparison, ops.evecs, ops.evals);
  return ops;
}

Vec ScatteringOperators::free_power(const Vec& f, int n) const {
  Vec c = evecs.adjoint() * f;
  for (Index k = 0; k < c.size(); ++k) c(k) *= std::exp(cplx(0.0, -n * tau * evals(k)));
  return evecs * c;
}

ScatteringReport wave_operator_apply(const ScatteringOperators& ops, const FiniteLattice& lat, const Vec& f,
                                     const ScatteringOptions& opt, const std::optional<Mat>& P) {
  check_normalized(f);
  if (f.size() != ops.M.rows()) fail(ErrorCode::DimensionMismatch, "state size does not match the monodromy");
  if (opt.n_periods < 1) fail(ErrorCode::InvalidArgument, "n_periods must be >= 1");
  const int shell = shell_of(lat, opt.shell);
  const Vec pf = P ? Vec(*P * f) : f;
  const Mat Madj = ops.M.adjoint();
  ScatteringReport r;
  r.scenario = "wave-operator";
  r.comparison = P ? "h_alpha (P_ac surrogate)" : "Delta";
  r.tau = ops.tau;
  r.reference_norm = pf.norm();

  // W_{n+1} f = M^* (M^*)^n a_{n+1}, and (M^*)^n a_{n+1} = W_n e^{-i tau h_0} f is the intertwining term.
  Vec W = pf;  // W_0 f = P f
  for (int n = 0; n <= opt.n_periods; ++n) {
    const Vec a = ops.free_power(pf, n);
    r.times.push_back(n * ops.tau);
    r.norms.push_back(W.norm());
    r.isometry.push_back(std::abs(W.norm() - r.reference_norm));
    r.boundary.push_back(boundary_mass(lat, a, shell));
    if (n == opt.n_periods) break;
    Vec WE = ops.free_power(pf, n + 1);
    for (int k = 0; k < n; ++k) WE = Madj * WE;
    r.intertwining.push_back((ops.M * W - WE).norm());
    Vec next = Madj * WE;
    r.decrements.push_back((next - W).norm());
    W = std::move(next);
  }
  r.final_state = W;
  finish(r, opt.conv_tol * f.norm(), opt.boundary_cap, opt.strict_boundary, r.final_decrement());
  return r;
}

ScatteringReport wave_operator_apply(const DrivenHamiltonian& h, const SpMat& comparison, const Vec& f,
                                     const ScatteringOptions& opt, const std::optional<Mat>& P) {
  check_normalized(f);
  const ScatteringOperators ops = ScatteringOperators::build(h, comparison, opt.steps_per_period, opt.step);
  return wave_operator_apply(ops, h.lattice(), f, opt, P);
}

ScatteringReport adjoint_wave_probe(const ScatteringOperators& ops, const FiniteLattice& lat, const Vec& g,
                                    const ScatteringOptions& opt, const std::optional<Mat>& P) {
  check_normalized(g);
  if (g.size() != ops.M.rows()) fail(ErrorCode::DimensionMismatch, "state size does not match the monodromy");
  const int shell = shell_of(lat, opt.shell);
  const Vec pg = P ? Vec(*P * g) : g;
  ScatteringReport r;
  r.scenario = "adjoint-probe";
  r.tau = ops.tau;
  r.reference_norm = pg.norm();
  Vec b = pg;  // U(n tau, 0) g
  Vec omega = pg;
  for (int n = 0; n <= opt.n_periods; ++n) {
    r.times.push_back(n * ops.tau);
    r.norms.push_back(omega.norm());
    r.isometry.push_back(std::abs(omega.norm() - r.reference_norm));
    r.boundary.push_back(boundary_mass(lat, b, shell));
    if (n == opt.n_periods) break;
    b = ops.M * b;
    const Vec next = ops.free_power(b, -(n + 1));
    // e^{-i tau h_0} Omega_n g - Omega_n M g
    r.intertwining.push_back((ops.free_power(omega, 1) - ops.free_power(b, -n)).norm());
    r.decrements.push_back((next - omega).norm());
    omega = next;
  }
  r.final_state = omega;
  finish(r, opt.conv_tol * g.norm(), opt.boundary_cap, opt.strict_boundary, r.final_decrement());
  return r;
}

ScatteringReport time_decaying_scenario(const Generator& h, const SpMat& comparison, const FiniteLattice& lat,
                                        const Vec& f, const TimeDecayingOptions& opt, const GaugeTransform* gauge,
                                        const Vec* g) {
  check_normalized(f);
  if (g) check_normalized(*g);
  if (f.size() != h.dim() || comparison.rows() != h.dim()) fail(ErrorCode::DimensionMismatch, "size mismatch");
  if (!(opt.dt_sample > 0.0) || !(opt.t_max > 0.0)) fail(ErrorCode::InvalidArgument, "time grid must be positive");
  const int K = std::max(1, static_cast<int>(std::lround(opt.t_max / opt.dt_sample)));
  const double dt = opt.t_max / K;
  const int shell = shell_of(lat, opt.shell);
  auto Jstar = [&](double t, const Vec& v) -> Vec {
    if (!gauge) return v;
    return gauge->J(t).conjugate().cwiseProduct(v);
  };
  auto Japply = [&](double t, const Vec& v) -> Vec {
    if (!gauge) return v;
    return gauge->J(t).cwiseProduct(v);
  };
  ScatteringReport r;
  r.scenario = gauge ? "time-decaying (gauge)" : "time-decaying";
  Vec a = f;                   // e^{-i t Delta} f
  Vec b = g ? *g : f;          // Ubar(t_n, 0) g
  for (int n = 0; n <= K; ++n) {
    const double t = n * dt;
    r.times.push_back(t);
    r.boundary.push_back(std::max(boundary_mass(lat, a, shell), boundary_mass(lat, Japply(t, b), shell)));
    if (n == K) break;
    const Vec y = propagate(h, Jstar(t, a), t, t + dt, opt.steps_per_sample, opt.step);
    Vec a1 = a;
    expm_apply(comparison, dt, a1, opt.step.exp);
    r.decrements.push_back((Jstar(t + dt, a1) - y).norm());
    const Vec b1 = propagate(h, b, t, t + dt, opt.steps_per_sample, opt.step);
    Vec fb = Japply(t, b);
    expm_apply(comparison, dt, fb, opt.step.exp);
    r.adjoint_decrements.push_back((Japply(t + dt, b1) - fb).norm());
    a = std::move(a1);
    b = b1;
  }
  // literal approximants at the final time
  const Vec W = propagate(h, Jstar(opt.t_max, a), opt.t_max, 0.0, K * opt.steps_per_sample, opt.step);
  Vec Om = Japply(opt.t_max, b);
  expm_apply(comparison, -opt.t_max, Om, opt.step.exp);
  r.norms = {W.norm()};
  r.isometry = {std::abs(W.norm() - 1.0)};
  r.adjoint_isometry = std::abs(Om.norm() - 1.0);
  r.final_state = W;
  const double fin = std::max(r.decrements.back(), r.adjoint_decrements.back());
  finish(r, opt.conv_tol, opt.boundary_cap, opt.strict_boundary, fin);
  return r;
}

RVec rho_weight(const FiniteLattice& lat, double a) {
  RVec w(lat.size());
  for (Index i = 0; i < lat.size(); ++i) w(i) = std::pow(1.0 + lat.abs_x(i), -a);
  return w;
}

namespace {

// Largest eigenvalue of a Hermitian positive operator by restarted Lanczos.
double top_eigenvalue(const std::function<Vec(const Vec&)>& B, Index n, const ResolventOptions& opt, int& matvecs) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  v.normalize();
  const int m = std::max(2, std::min<int>(opt.krylov_dim, static_cast<int>(n)));
  double prev = 0.0;
  for (int restart = 0; restart < opt.max_restarts; ++restart) {
    Mat V(n, m);
    RVec alpha(m), beta(m);
    V.col(0) = v;
    int k = 0;
    double last_beta = 0.0;
    for (; k < m; ++k) {
      Vec w = B(V.col(k));
      ++matvecs;
      alpha(k) = V.col(k).dot(w).real();
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(k + 1) * (V.leftCols(k + 1).adjoint() * w);
      last_beta = w.norm();
      if (k + 1 < m) {
        beta(k) = last_beta;
        if (last_beta <= 1e-14 * std::abs(alpha(k))) {
          ++k;
          break;
        }
        V.col(k + 1) = w / last_beta;
      }
    }
    RMat T = RMat::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      T(i, i) = alpha(i);
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(T);
    const double theta = es.eigenvalues()(k - 1);
    const RVec s = es.eigenvectors().col(k - 1);
    const double resid = (k < m ? 0.0 : last_beta) * std::abs(s(k - 1));
    v = V.leftCols(k) * s.cast<cplx>();
    v.normalize();
    if (resid <= opt.tol * theta || (restart > 0 && std::abs(theta - prev) <= 1e-3 * opt.tol * theta)) return theta;
    prev = theta;
  }
  fail(ErrorCode::SolverStagnation, "Lanczos did not converge for the weighted resolvent norm");
}

}  // namespace

std::vector<ResolventSample> weighted_resolvent_sample(const FiniteLattice& lat, const RVec& weight,
                                                       const std::vector<cplx>& lambdas, const ResolventOptions& opt) {
  if (weight.size() != lat.size()) fail(ErrorCode::DimensionMismatch, "weight needs one value per vertex");
  const PeriodicGraph& graph = lat.graph();
  const auto zero = StaticMagneticPotential::zero(graph);
  const SpMat D = magnetic_laplacian(lat, zero);
  const BandStructure bands = band_structure(graph, zero, std::vector<double>(static_cast<std::size_t>(graph.nu()), 0.0), 64);
  std::vector<double> thresholds;
  if (graph.nu() == 1) {
    for (int e = 0; e <= graph.kappa_plus(); e += 2) thresholds.push_back(e);
  } else {
    for (const auto& [a, b] : bands.intervals) {
      thresholds.push_back(a);
      thresholds.push_back(b);
    }
  }
  using CSp = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;
  CSp Dc = D;
  CSp I(D.rows(), D.cols());
  I.setIdentity();
  const double winf = weight.cwiseAbs().maxCoeff();
  const Vec wc = weight.cast<cplx>();

  std::vector<ResolventSample> out;
  for (cplx lambda : lambdas) {
    ResolventSample s;
    s.lambda = lambda;
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : bands.intervals) {
      const double x = std::clamp(lambda.real(), a, b);
      dist = std::min(dist, std::abs(lambda - cplx(x, 0.0)));
    }
    s.varrho = dist;
    for (double th : thresholds) s.near_threshold = s.near_threshold || std::abs(lambda - th) < opt.delta;
    Eigen::SparseLU<CSp> lu, luc;
    lu.compute(CSp(Dc - lambda * I));
    luc.compute(CSp(Dc - std::conj(lambda) * I));
    if (lu.info() != Eigen::Success || luc.info() != Eigen::Success) {
      fail(ErrorCode::SolverStagnation, "sparse factorization failed at the requested lambda");
    }
    auto B = [&](const Vec& x) -> Vec {
      const Vec y = wc.cwiseProduct(lu.solve(Vec(wc.cwiseProduct(x))));
      return wc.cwiseProduct(luc.solve(Vec(wc.cwiseProduct(y))));
    };
    s.norm = std::sqrt(top_eigenvalue(B, lat.size(), opt, s.iterations));
    s.scaled = s.norm * std::max(1.0, s.varrho);
    s.neumann = winf * winf / std::abs(lambda);
    out.push_back(s);
  }
  return out;
}

nlohmann::json to_json(const std::vector<ResolventSample>& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& x : s) {
    arr.push_back({{"lambda", {x.lambda.real(), x.lambda.imag()}},
                   {"norm", x.norm},
                   {"varrho", x.varrho},
                   {"scaled", x.scaled},
                   {"neumann", x.neumann},
                   {"near_threshold", x.near_threshold},
                   {"matvecs", x.iterations}});
  }
  return arr;
}

}  // namespace floqscat
