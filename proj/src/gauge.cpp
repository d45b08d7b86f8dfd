#include "floqscat/gauge.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "floqscat/error.hpp"

namespace floqscat {

Vec GaugeTransform::J(double t) const {
  Vec j(Q_->sites());
  for (Index x = 0; x < j.size(); ++x) j(x) = std::exp(cplx(0.0, -(*Q_)(x, t)));
  return j;
}

double GaugeTransform::period_defect() const {
  const Vec j = J(period());
  return (j.array() - 1.0).abs().maxCoeff();
}

DrivenHamiltonian gauge_transform(const DrivenHamiltonian& h, std::shared_ptr<const PrimitiveQ> Q) {
  if (!Q) {
    if (!h.Q()) fail(ErrorCode::InvalidArgument, "gauge_transform needs a q component");
    Q = std::make_shared<const PrimitiveQ>(*h.Q());
  }
  if (Q->sites() != h.dim()) fail(ErrorCode::DimensionMismatch, "primitive does not match the lattice");
  if (h.q() && h.q()->periodic()) {
    double res = 0.0;
    for (Index x = 0; x < h.dim(); ++x) res = std::max(res, std::abs((*Q)(x, h.period())));
    if (res > std::max(Q->tol(), 1e-14)) {
      fail(ErrorCode::MeanNonzero, "Q(tau) = " + std::to_string(res) + " breaks periodicity of the gauge");
    }
  }
  const FiniteLattice& lat = h.lattice();
  auto edges = std::make_shared<std::vector<std::pair<Index, Index>>>();
  for (const auto& e : lat.edges()) edges->emplace_back(e.x, e.y);
  auto delta = h.delta() ? std::make_shared<const TimeField>(*h.delta()) : nullptr;
  TimeField::Eval phi = [edges, delta, Q](Index e, double t) {
    const auto& [x, y] = (*edges)[static_cast<std::size_t>(e)];
    const double d = delta ? (*delta)(e, t) : 0.0;
    return d + (*Q)(x, t) - (*Q)(y, t);
  };
  const bool periodic = !h.q() || h.q()->periodic();
  TimeField field(FieldKind::MagneticEdge, static_cast<Index>(edges->size()), h.period(), "gauge", phi, nullptr,
                  periodic && (!delta || delta->periodic()));
  field.spec = {{"family", "gauge"}};
  DrivenHamiltonian out(h.lattice_ptr(), h.alpha(), h.p(), h.period());
  out.with_magnetic(std::move(field));
  if (h.v()) out.with_potential(*h.v());
  out.with_step_rule(StepRule::Midpoint);
  return out;
}

double conjugation_defect(const DrivenHamiltonian& h, const DrivenHamiltonian& transformed, int samples) {
  if (!h.Q()) return 0.0;
  const GaugeTransform g(std::make_shared<const PrimitiveQ>(*h.Q()));
  double worst = 0.0;
  SpMat a, b;
  for (int k = 0; k < samples; ++k) {
    const double t = h.period() * (k + 0.31) / samples;
    h.assemble(t, a);
    Mat hm = Mat(a);
    for (Index x = 0; x < h.dim(); ++x) hm(x, x) -= (*h.q())(x, t);
    const Vec j = g.J(t);
    const Mat conj = j.conjugate().asDiagonal() * hm * j.asDiagonal();
    transformed.assemble(t, b);
    worst = std::max(worst, (Mat(b) - conj).cwiseAbs().maxCoeff());
  }
  return worst;
}

Commutator commutator_K(const SpMat& h0, const RVec& Q, int kappa_plus, bool trace_norm) {
  if (Q.size() != h0.rows()) fail(ErrorCode::DimensionMismatch, "Q does not match h0");
  Commutator c;
  const Vec q = Q.cast<cplx>();
  c.K = q.asDiagonal() * h0 - h0 * q.asDiagonal();
  c.K.prune([](Index, Index, const cplx& v) { return v != cplx(0.0); });
  c.K.makeCompressed();
  double sum = 0.0, hop = 0.0;
  for (Index x = 0; x < h0.outerSize(); ++x) {
    for (SpMat::InnerIterator it(h0, x); it; ++it) {
      if (it.col() > x) {
        sum += std::abs(Q(x) - Q(it.col()));
        hop = std::max(hop, std::abs(it.value()));
      }
    }
  }
  c.edge_bound = 2.0 * hop * kappa_plus * sum;
  if (trace_norm) {
    Eigen::BDCSVD<Mat> svd{Mat(c.K)};
    c.trace_norm = svd.singularValues().sum();
  }
  return c;
}

double commutator_integral(const SpMat& h0, const PrimitiveQ& Q, int samples) {
  double acc = 0.0;
  RVec q;
  for (int k = 0; k < samples; ++k) {
    Q.sample(Q.period() * (k + 0.5) / samples, q);
    acc += commutator_K(h0, q, 0, true).trace_norm;
  }
  return acc * Q.period() / samples;
}

nlohmann::json GaugeExpansion::to_json() const {
  return {{"t", t}, {"Qdot_trace_norm", Qdot_trace}, {"C", C}, {"int_q", int_q}, {"bound", bound}, {"holds", holds}};
}

GaugeExpansion gauge_propagator_expansion(const TimeField& q, const PrimitiveQ& Q, double t, int samples) {
  GaugeExpansion g;
  g.t = t;
  Q.sample(t, g.Q);
  g.Qdot.resize(g.Q.size());
  for (Index x = 0; x < g.Q.size(); ++x) {
    g.Qdot(x) = std::exp(cplx(0.0, -g.Q(x))) - 1.0 + cplx(0.0, g.Q(x));
  }
  g.Qdot_trace = g.Qdot.cwiseAbs().sum();
  // C = sup_s ||int_0^s q Q||_{B_1}; for diagonal q the integral is Q(s)^2 / 2
  const double span = q.periodic() ? Q.period() : std::max(std::abs(t), Q.period());
  RVec qs;
  for (int k = 0; k <= samples; ++k) {
    Q.sample(span * k / samples, qs);
    g.C = std::max(g.C, 0.5 * qs.squaredNorm());
  }
  g.C = std::max(g.C, 0.5 * g.Q.squaredNorm());
  using GL = boost::math::quadrature::gauss<double, 10>;
  const int panels = std::max(1, static_cast<int>(std::ceil(std::abs(t) / Q.period() * 64)));
  for (int p = 0; p < panels; ++p) {
    const double a = t * p / panels, b = t * (p + 1) / panels;
    g.int_q += std::abs(GL::integrate(
        [&](double s) {
          double m = 0.0;
          for (Index x = 0; x < q.sites(); ++x) m = std::max(m, std::abs(q(x, s)));
          return m;
        },
        a, b));
  }
  g.bound = g.C * std::exp(g.int_q);
  g.holds = g.Qdot_trace <= g.bound * (1.0 + 1e-12) + 1e-15;
  return g;
}

double quasienergy_set_distance(const RVec& a, const RVec& b, double omega) {
  auto one_way = [omega](const RVec& u, const RVec& v) {
    double worst = 0.0;
    for (Index i = 0; i < u.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < v.size(); ++j) best = std::min(best, circular_distance(u(i), v(j), omega));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_way(a, b), one_way(b, a));
}

nlohmann::json GaugeEquivalence::to_json() const {
  return {{"n_steps", n_steps}, {"monodromy_defect", monodromy_defect}, {"eigenphase_defect", eigenphase_defect}};
}

GaugeEquivalence gauge_equivalence_check(const DrivenHamiltonian& h, int n_steps, const StepOptions& opt) {
  const DrivenHamiltonian hb = gauge_transform(h);
  GaugeEquivalence r;
  r.n_steps = n_steps;
  const Mat M = monodromy(h, 0.0, n_steps, opt).U;
  const Mat Mb = monodromy(hb, 0.0, n_steps, opt).U;
  r.monodromy_defect = (M - Mb).cwiseAbs().maxCoeff();
  const auto qa = quasienergy_spectrum(M, h.period());
  const auto qb = quasienergy_spectrum(Mb, h.period());
  r.eigenphase_defect = quasienergy_set_distance(qa.lambda, qb.lambda, qa.omega);
  return r;
}

}  // namespace floqscat
