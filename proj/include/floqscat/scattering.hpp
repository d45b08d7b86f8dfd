#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "floqscat/gauge.hpp"

namespace floqscat {

/// Normalized Gaussian wavepacket exp(-|x-c|^2 / (4 sigma^2) + i <k0, x>) over the embedded positions.
Vec gaussian_packet(const FiniteLattice& lat, const std::vector<double>& center, double sigma,
                    const std::vector<double>& k0);

/// (sum |v|^2)^2 / (N sum |v|^4), in (0, 1]; near 1 for extended vectors.
double participation_ratio(const Vec& v);

/// Band-and-delocalization surrogate for P_ac(h_alpha): eigenvectors of the
/// comparison operator with eigenvalue inside a band interval (flat-band
/// values excluded) and participation ratio >= pr_min.
Mat ac_projector(const Mat& comparison, const BandStructure& bands, double pr_min = 0.1, double tol = 1e-9);
/// Same heuristic on the monodromy: Schur vectors with participation ratio >= pr_min.
Mat monodromy_ac_projector(const Mat& M, double pr_min = 0.1);

struct ScatteringOptions {
  int n_periods = 100;
  int steps_per_period = 512;
  double conv_tol = 1e-3;  // final decrement <= conv_tol ||f||
  double boundary_cap = 1e-6;
  int shell = 0;  // boundary shell width, default L/10
  bool strict_boundary = true;  // raise BoundaryContamination when the cap is exceeded
  StepOptions step;
};

struct ScatteringReport {
  std::string scenario;
  std::string comparison = "Delta";
  double tau = 0.0;  // 0 for non-periodic runs
  std::vector<double> times;
  std::vector<double> norms;         // ||W_n f||, n = 0..n_max
  std::vector<double> decrements;    // ||W_{n+1} f - W_n f||, n = 0..n_max-1
  std::vector<double> isometry;      // | ||W_n f|| - ||P f|| |
  std::vector<double> intertwining;  // ||U(tau,0) W_n f - W_n e^{-i tau h_0} f||
  std::vector<double> boundary;      // boundary mass of the evolved state at t_n
  std::vector<double> adjoint_decrements;  // time-decaying runs: adjoint probe
  double adjoint_isometry = 0.0;
  double reference_norm = 1.0;  // ||P f||
  bool converged = false;
  bool contaminated = false;
  std::string verdict;  // pass | not-converged | boundary-contaminated
  Vec final_state;      // approximant at the last time
  double final_decrement() const { return decrements.empty() ? 0.0 : decrements.back(); }
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// Monodromy U(tau,0) and the spectral data of the comparison operator, computed once.
struct ScatteringOperators {
  double tau = 1.0;
  Mat M;
  Mat evecs;  // comparison eigenvectors
  RVec evals;
  static ScatteringOperators build(const Generator& h, const SpMat& comparison, int steps_per_period,
                                   const StepOptions& opt = {});
  static ScatteringOperators from_monodromy(Mat M, const SpMat& comparison, double tau);
  /// e^{-i n tau h_0} f (n may be negative)
  Vec free_power(const Vec& f, int n) const;
};

/// W_n f = (U(tau,0)^*)^n e^{-i n tau h_0} P f for n = 0..n_periods. NonNormalizedInput unless ||f|| = 1.
ScatteringReport wave_operator_apply(const ScatteringOperators& ops, const FiniteLattice& lat, const Vec& f,
                                     const ScatteringOptions& opt, const std::optional<Mat>& P = std::nullopt);
ScatteringReport wave_operator_apply(const DrivenHamiltonian& h, const SpMat& comparison, const Vec& f,
                                     const ScatteringOptions& opt, const std::optional<Mat>& P = std::nullopt);

/// Omega_n g = e^{i n tau h_0} U(tau,0)^n g and its Cauchy decrements.
ScatteringReport adjoint_wave_probe(const ScatteringOperators& ops, const FiniteLattice& lat, const Vec& g,
                                    const ScatteringOptions& opt, const std::optional<Mat>& P = std::nullopt);

struct TimeDecayingOptions {
  double t_max = 50.0;
  double dt_sample = 1.0;
  int steps_per_sample = 64;
  double conv_tol = 1e-3;
  double boundary_cap = 1e-6;
  int shell = 0;
  bool strict_boundary = true;
  StepOptions step;
};

/// W(t)f = U(0,t) e^{-itDelta} f on t_n = n dt_sample (h need not be periodic), together with the
/// adjoint probe e^{itDelta} U(t,0) g. With a gauge, h is the transformed generator and
/// W(t)f = Ubar(0,t) J(t)^* e^{-itDelta} f.
ScatteringReport time_decaying_scenario(const Generator& h, const SpMat& comparison, const FiniteLattice& lat,
                                        const Vec& f, const TimeDecayingOptions& opt,
                                        const GaugeTransform* gauge = nullptr, const Vec* g = nullptr);

/// rho_a(x) = (1+|x|)^{-a}
RVec rho_weight(const FiniteLattice& lat, double a);

struct ResolventSample {
  cplx lambda;
  double norm = 0.0;      // ||w (Delta - lambda)^{-1} w||
  double varrho = 0.0;    // dist(lambda, sigma(Delta))
  double scaled = 0.0;    // norm * max(1, varrho)
  double neumann = 0.0;   // ||w||_inf^2 / |lambda|, leading Neumann term
  bool near_threshold = false;  // within delta of a band edge (excluded set)
  int iterations = 0;
};

struct ResolventOptions {
  double tol = 1e-9;
  int krylov_dim = 40;
  int max_restarts = 200;
  double delta = 0.05;
};

/// Operator norm of the weighted free resolvent on the truncation, by restarted Lanczos on A^* A.
std::vector<ResolventSample> weighted_resolvent_sample(const FiniteLattice& lat, const RVec& weight,
                                                       const std::vector<cplx>& lambdas,
                                                       const ResolventOptions& opt = {});
nlohmann::json to_json(const std::vector<ResolventSample>& s);

}  // namespace floqscat
