#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "floqscat/spectral.hpp"

namespace floqscat {

enum class FieldKind { MagneticEdge, ElectricVertex };

/// Real field on the vertices (electric) or on the stored-orientation edges
/// (magnetic) of one truncation. The reversed edge carries the negated value.
class TimeField {
 public:
  using Eval = std::function<double(Index, double)>;

  TimeField() = default;
  TimeField(FieldKind kind, Index sites, double tau, std::string family, Eval value, Eval primitive = nullptr,
            bool periodic = true);

  static TimeField zero(FieldKind kind, Index sites, double tau);

  double operator()(Index site, double t) const { return value_ ? value_(site, t) : 0.0; }
  void sample(double t, RVec& out) const;
  bool has_primitive() const { return static_cast<bool>(primitive_) || !value_; }
  double primitive(Index site, double t) const { return primitive_ ? primitive_(site, t) : 0.0; }

  FieldKind kind() const { return kind_; }
  Index sites() const { return sites_; }
  double period() const { return tau_; }
  bool periodic() const { return periodic_; }
  bool is_zero() const { return !value_; }
  const std::string& family() const { return family_; }
  nlohmann::json spec;  // parameters as given, for reports

 private:
  FieldKind kind_ = FieldKind::ElectricVertex;
  Index sites_ = 0;
  double tau_ = 1.0;
  bool periodic_ = true;
  std::string family_ = "zero";
  Eval value_;
  Eval primitive_;
};

/// Value of a magnetic field on the oriented pair (x, y); negated when (x, y)
/// is the reverse of the stored edge. Throws if x, y are not adjacent.
double magnetic_value(const TimeField& field, const FiniteLattice& lat, Index x, Index y, double t);

/// Time envelope w(t) used by time-decaying families and Condition R.
struct TimeEnvelope {
  std::string kind = "none";  // none | power | gaussian
  double scale = 1.0;
  double exponent = 1.0;
  double operator()(double t) const;
  static TimeEnvelope from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Weight b with b_x^2 = c (1 + |x|)^{-decay}; `cls` names the class it is
/// claimed to belong to: 'a' (exponent a) or 'p' (exponent p).
struct Weight {
  double c = 1.0;
  double decay = 2.0;
  char cls = 'a';
  double exponent = 2.0;
  double b(double absx) const;
  static Weight from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Registered families. Unknown names raise UnknownFamily.
TimeField make_electric_field(const nlohmann::json& spec, const FiniteLattice& lat);
TimeField make_magnetic_field(const nlohmann::json& spec, const FiniteLattice& lat);
StaticElectricPotential make_static_potential(const nlohmann::json& spec, const PeriodicGraph& g);
StaticMagneticPotential make_static_magnetic(const nlohmann::json& spec, const PeriodicGraph& g);

/// G_s(z) = int_0^z cos(u) u^{s-1} du for s > 0, z >= 0.
double cos_power_integral(double s, double z);

struct PrimitiveOptions {
  bool check_period = true;
  double horizon = 0.0;  // table length for non-periodic fields; default one period
  int initial_panels = 64;
  int max_panels = 1 << 16;
};

/// Q_x(t) = int_0^t q_x(s) ds, from the field's closed form when registered,
/// otherwise from a Gauss-Legendre panel table refined until Q(horizon)
/// stabilizes.
class PrimitiveQ {
 public:
  static PrimitiveQ of(const TimeField& q, const PrimitiveOptions& opt = {});

  double operator()(Index x, double t) const;
  void sample(double t, RVec& out) const;
  bool closed_form() const { return closed_; }
  Index sites() const { return sites_; }
  double period() const { return tau_; }
  double tol() const { return tol_q_; }
  /// max_x |Q_x(tau)|
  double period_residual() const { return residual_; }
  int panels() const { return panels_; }

 private:
  std::shared_ptr<const TimeField> field_;
  bool closed_ = false;
  Index sites_ = 0;
  double tau_ = 1.0;
  double horizon_ = 1.0;
  double tol_q_ = 0.0;
  double residual_ = 0.0;
  int panels_ = 0;
  double h_ = 0.0;
  RMat table_;  // (panels+1) x sites, cumulative integral at panel edges
};

/// Verdict of one clause; unverifiable marks infinite-volume statements that a
/// truncation cannot settle.
enum class Verdict { Pass, Fail, Unverifiable };
std::string_view to_string(Verdict v) noexcept;

struct ClauseResult {
  std::string clause;
  Verdict verdict = Verdict::Pass;
  double measured = 0.0;
  double bound = 0.0;
  std::string note;
};

struct ConditionReport {
  std::string condition;
  std::vector<ClauseResult> clauses;
  nlohmann::json weights;
  Verdict overall() const;
  const ClauseResult& clause(const std::string& name) const;
  nlohmann::json to_json() const;
};

struct ConditionInputs {
  const FiniteLattice* lat = nullptr;
  const StaticMagneticPotential* alpha = nullptr;
  const TimeField* delta = nullptr;  // beta = alpha + delta
  const TimeField* v = nullptr;
  const TimeField* q = nullptr;
  const PrimitiveQ* Q = nullptr;
  const StaticElectricPotential* p = nullptr;
  const SpMat* h0 = nullptr;  // Condition H
  std::optional<Weight> b;
  std::optional<TimeEnvelope> w;
  double rho_a = 2.0;  // exponent of rho_a(x) = (1+|x|)^{-a} in Condition R
  double c = 1.0;      // constant in F_y
  double tau = 1.0;
  double t_max = 0.0;  // Condition R time window; defaults to 10 tau
  int time_samples = 256;
  int shell = 0;  // outer shell for o(1) / boundedness tests; default L/10
};

ConditionReport check_condition(const std::string& name, const ConditionInputs& in);

struct MagneticDifference {
  SpMat F;
  std::optional<SpMat> Fb;
  double Fb_norm = 0.0;
  double bound = 0.0;  // kappa_plus
  bool bound_holds = true;
};

/// F = Delta_beta - Delta_alpha via the sine formula; with a weight also
/// F_b = b^{-1} F b^{-1} and its operator norm.
MagneticDifference magnetic_difference(const FiniteLattice& lat, const RVec& alpha_phase, const RVec& beta_phase,
                                       const std::optional<Weight>& b = std::nullopt);

/// Largest singular value by power iteration on A^* A.
double sparse_op_norm(const SpMat& a, double tol = 1e-12, int max_iter = 5000);

}  // namespace floqscat
