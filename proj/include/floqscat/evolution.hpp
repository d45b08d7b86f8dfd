#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "floqscat/driving.hpp"
#include "floqscat/expm.hpp"

namespace floqscat {

/// Time-dependent Hermitian generator h(t).
class Generator {
 public:
  virtual ~Generator() = default;
  virtual Index dim() const = 0;
  virtual double period() const = 0;
  virtual void assemble(double t, SpMat& out) const = 0;
  /// Generator used for the step [t0, t1]; defaults to the midpoint value.
  virtual void assemble_step(double t0, double t1, SpMat& out) const { assemble(0.5 * (t0 + t1), out); }
};

/// Generator given by a callback (small systems, tests).
class FunctionGenerator final : public Generator {
 public:
  using Fn = std::function<Mat(double)>;
  FunctionGenerator(Index n, double tau, Fn fn) : n_(n), tau_(tau), fn_(std::move(fn)) {}
  Index dim() const override { return n_; }
  double period() const override { return tau_; }
  void assemble(double t, SpMat& out) const override;
  Mat dense(double t) const { return fn_(t); }

 private:
  Index n_;
  double tau_;
  Fn fn_;
};

enum class StepRule {
  Midpoint,  // h evaluated at the step midpoint
  Averaged   // as Midpoint, but q replaced by its exact step average (Q(t1) - Q(t0)) / dt
};
std::string_view to_string(StepRule r) noexcept;
StepRule step_rule_from_string(std::string_view s);

/// h(t) = Delta_{alpha + delta(t)} + p + v(t) + q(t) on a truncation.
class DrivenHamiltonian final : public Generator {
 public:
  DrivenHamiltonian(std::shared_ptr<const FiniteLattice> lat, StaticMagneticPotential alpha, StaticElectricPotential p,
                    double tau);

  DrivenHamiltonian& with_magnetic(TimeField delta);
  DrivenHamiltonian& with_potential(TimeField v);
  /// Sets q and builds its primitive (raises PeriodMeanNonzero for periodic q with nonzero mean).
  DrivenHamiltonian& with_q(TimeField q, const PrimitiveOptions& opt = {});
  DrivenHamiltonian& with_step_rule(StepRule r) {
    rule_ = r;
    return *this;
  }

  Index dim() const override { return lat_->size(); }
  double period() const override { return tau_; }
  void assemble(double t, SpMat& out) const override;
  void assemble_step(double t0, double t1, SpMat& out) const override;

  /// Delta_alpha + p, the comparison operator h_0.
  SpMat comparison() const;
  /// Edge phases alpha_e + delta_e(t).
  RVec edge_phases(double t) const;
  /// Static diagonal: degree / 2 + p.
  const RVec& static_diagonal() const { return diag0_; }

  const FiniteLattice& lattice() const { return *lat_; }
  std::shared_ptr<const FiniteLattice> lattice_ptr() const { return lat_; }
  const StaticMagneticPotential& alpha() const { return alpha_; }
  const StaticElectricPotential& p() const { return p_; }
  const std::optional<TimeField>& delta() const { return delta_; }
  const std::optional<TimeField>& v() const { return v_; }
  const std::optional<TimeField>& q() const { return q_; }
  const std::optional<PrimitiveQ>& Q() const { return Q_; }
  StepRule step_rule() const { return rule_; }

  /// max over sampled t of ||h(t+tau) - h(t)||_max and of the Hermitian defect.
  std::pair<double, double> sample_checks(int samples = 16) const;

 private:
  void fill(double t_edges, const RVec& extra_diag, SpMat& out) const;

  std::shared_ptr<const FiniteLattice> lat_;
  StaticMagneticPotential alpha_;
  StaticElectricPotential p_;
  double tau_;
  OperatorPattern pattern_;
  RVec alpha_edges_;
  RVec diag0_;
  std::optional<TimeField> delta_, v_, q_;
  std::optional<PrimitiveQ> Q_;
  StepRule rule_ = StepRule::Midpoint;
};

struct StepOptions {
  ExpOptions exp;
  bool check_hermitian = false;  // NonHermitianSample if a step generator is not Hermitian
  double hermitian_tol = 1e-12;
};

/// Midpoint-exponential stepping of i u' = h(t) u from s to t (t < s allowed).
Vec propagate(const Generator& h, const Vec& f, double s, double t, int n_steps, const StepOptions& opt = {});
/// Same for every column of a block.
void propagate_block(const Generator& h, Mat& block, double s, double t, int n_steps, const StepOptions& opt = {});

struct Propagator {
  enum class Method { Stepping, Dyson };
  Method method = Method::Stepping;
  double s = 0.0, t = 0.0;
  Mat U;
  int steps = 0;             // stepping
  int order = 0;             // Dyson order J
  int nodes = 0;             // Dyson quadrature nodes
  double unitarity_defect = 0.0;
  double A = 0.0;            // int_s^t ||V||
  double tail_bound = 0.0;   // sum_{j>J} A^j / j!
  double duhamel_bound = 0.0;  // min{A, 1} e^A
  nlohmann::json to_json() const;
};

Propagator propagator(const Generator& h, double s, double t, int n_steps, const StepOptions& opt = {});

struct DysonOptions {
  int intervals = 0;        // fixed node count minus one (even); 0 = refine automatically
  double quad_tol = 1e-10;  // automatic refinement target (max-entry change)
  int max_intervals = 1 << 13;
};

/// U_0 + sum_{j<=J} (-i)^j U_j for h(t) = h0 + V(t) by iterated cumulative Simpson
/// quadrature in the interaction picture.
Propagator dyson_propagator(const Mat& h0, const std::function<Mat(double)>& V, double s, double t, int order,
                            const DysonOptions& opt = {});
/// Smallest J with sum_{j>J} A^j / j! <= tol.
int dyson_order_for(double A, double tol);
double dyson_tail(double A, int order);

/// M(t0) = U(t0 + tau, t0).
Propagator monodromy(const Generator& h, double t0, int n_steps, const StepOptions& opt = {});
/// ||M(t0) - U(t0,0) U(tau,0) U(0,t0)||_max with U(0,t0) = U(t0,0)^*; grids aligned at step tau / n_steps.
double conjugacy_defect(const Generator& h, double t0, int n_steps, const StepOptions& opt = {});
/// ||M(t0 + tau) - M(t0)||_max
double shift_defect(const Generator& h, double t0, int n_steps, const StepOptions& opt = {});

struct QuasienergySpectrum {
  double tau = 1.0;
  double omega = kTwoPi;
  Vec mu;                     // unitary eigenvalues
  RVec lambda;                // folded into [0, omega), sorted
  std::vector<double> distinct;
  std::vector<int> multiplicity;
  std::optional<Mat> vectors;  // columns ordered like lambda
  double unitarity_defect = 0.0;
  nlohmann::json to_json() const;
};

struct QuasienergyOptions {
  double unitarity_tol = 1e-8;
  bool eigenvectors = false;
  double cluster_tol = 1e-9;
};

/// (-arg mu mod 2 pi) / tau with arg in (-pi, pi]; values within 1e-12 omega of omega fold to 0.
double fold_quasienergy(cplx mu, double tau);
/// Distance on the circle R / omega Z.
double circular_distance(double a, double b, double omega);

QuasienergySpectrum quasienergy_spectrum(const Mat& M, double tau, const QuasienergyOptions& opt = {});

/// max over `samples` times t_k = k tau / samples of ||M(t) psi(t) - e^{-i tau lambda} psi(t)||
/// with psi(t) = e^{i t lambda} U(t,0) psi0. n_steps must be a multiple of samples.
double floquet_mode_check(const Generator& h, double lambda, const Vec& psi0, int n_steps, int samples = 8,
                          double tol = 1e-8, const StepOptions& opt = {});

/// Raw binary dump of a complex matrix (rows, cols, column-major values).
void save_matrix(const Mat& m, const std::string& path);
Mat load_matrix(const std::string& path);

}  // namespace floqscat
