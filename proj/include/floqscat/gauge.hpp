#pragma once

#include <memory>

#include <json.hpp>

#include "floqscat/evolution.hpp"

namespace floqscat {

/// Diagonal unitary J(t) = e^{-i Q(t)}.
class GaugeTransform {
 public:
  explicit GaugeTransform(std::shared_ptr<const PrimitiveQ> Q) : Q_(std::move(Q)) {}
  Vec J(double t) const;
  const PrimitiveQ& Q() const { return *Q_; }
  std::shared_ptr<const PrimitiveQ> Q_ptr() const { return Q_; }
  double period() const { return Q_->period(); }
  /// max_x |J_x(tau) - 1|
  double period_defect() const;

 private:
  std::shared_ptr<const PrimitiveQ> Q_;
};

/// Hamiltonian with magnetic field phi(e,t) = beta(e,t) + Q_x(t) - Q_y(t), v kept, q removed.
/// Uses the primitive stored in h when Q is null. MeanNonzero if Q(tau) != 0 for periodic q.
DrivenHamiltonian gauge_transform(const DrivenHamiltonian& h, std::shared_ptr<const PrimitiveQ> Q = nullptr);

/// max over sampled t of |gauge_transform(h)(t) - J(t)^* (h(t) - q(t)) J(t)| entrywise.
double conjugation_defect(const DrivenHamiltonian& h, const DrivenHamiltonian& transformed, int samples = 16);

struct Commutator {
  SpMat K;                   // Q h0 - h0 Q
  double trace_norm = -1.0;  // sum of singular values (dense SVD), -1 when skipped
  double edge_bound = 0.0;   // kappa_plus * sum over edges |Q_x - Q_y|, scaled by the largest hopping
};

/// Literal commutator of diag(Q) with h0; edge_bound uses the off-diagonal entries of h0.
Commutator commutator_K(const SpMat& h0, const RVec& Q, int kappa_plus, bool trace_norm = true);
/// int_0^tau ||K(t)||_{B_1} dt by the rectangle rule on `samples` points.
double commutator_integral(const SpMat& h0, const PrimitiveQ& Q, int samples = 64);

struct GaugeExpansion {
  double t = 0.0;
  RVec Q;            // Q(t)
  Vec Qdot;          // diagonal of e^{-iQ} - I + iQ
  double Qdot_trace = 0.0;
  double C = 0.0;       // sup over sampled s of sum_x Q_x(s)^2 / 2
  double int_q = 0.0;   // int_0^t max_x |q_x|
  double bound = 0.0;   // C e^{int_q}
  bool holds = true;
  nlohmann::json to_json() const;
};

GaugeExpansion gauge_propagator_expansion(const TimeField& q, const PrimitiveQ& Q, double t, int samples = 256);

struct GaugeEquivalence {
  int n_steps = 0;
  double monodromy_defect = 0.0;   // ||M - Mbar||_max
  double eigenphase_defect = 0.0;  // Hausdorff distance of the folded quasienergy sets
  nlohmann::json to_json() const;
};

/// Monodromies of h and of its gauge transform at t0 = 0, each by stepping.
GaugeEquivalence gauge_equivalence_check(const DrivenHamiltonian& h, int n_steps, const StepOptions& opt = {});

/// Hausdorff distance between two sets of quasienergies on R / omega Z.
double quasienergy_set_distance(const RVec& a, const RVec& b, double omega);

}  // namespace floqscat
