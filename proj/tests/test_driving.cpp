#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "floqscat/driving.hpp"
#include "floqscat/error.hpp"

using namespace floqscat;
using nlohmann::json;

namespace {

// G_s(z) = (1/s) int_0^{z^s} cos(w^{1/s}) dw, composite Simpson.
double gs_oracle(double s, double z, int n) {
  const double W = std::pow(z, s);
  const double h = W / n;
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = k * h;
    const double f = std::cos(std::pow(w, 1.0 / s));
    sum += f * (k == 0 || k == n ? 1.0 : (k % 2 ? 4.0 : 2.0));
  }
  return sum * h / 3.0 / s;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;  // sentinel: no throw
}

TimeField strip_primitive(const TimeField& f) {
  return TimeField(f.kind(), f.sites(), f.period(), f.family(), [f](Index i, double t) { return f(i, t); }, nullptr,
                   f.periodic());
}

}  // namespace

TEST_CASE("cos power integral against substitution quadrature") {
  for (double s : {0.5, 0.75, 1.5, 2.0}) {
    for (double z : {0.3, 1.9, 2.5, 17.0, 29.0, 45.0, 120.0}) {
      const double ref = gs_oracle(s, z, s > 1 ? 400000 : 200000);
      CHECK(std::abs(cos_power_integral(s, z) - ref) < 1e-8 * std::max(1.0, std::abs(ref)));
    }
  }
  for (double z : {0.5, 3.0, 40.0}) CHECK(std::abs(cos_power_integral(1.0, z) - std::sin(z)) < 1e-12);
  CHECK(code_of([] { cos_power_integral(0.0, 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("closed-form primitives agree with panel quadrature") {
  const auto lat = truncate(PeriodicGraph::lattice_zd(1), 8);
  const std::vector<json> specs = {
      {{"family", "power-decay-sinusoidal"}, {"A", 0.7}, {"a", 1.5}, {"tau", 1.3}, {"phase", 0.4}},
      {{"family", "exp-decay-sinusoidal"}, {"A", 0.3}, {"length", 2.0}, {"tau", 0.8}, {"harmonic", 3}},
      {{"family", "profile-sinusoidal"}, {"A", 0.5}, {"profile", "gaussian"}, {"width", 3.0}, {"tau", 1.0}},
      {{"family", "profile-sinusoidal"}, {"A", 0.5}, {"profile", "random"}, {"seed", 4}, {"shape", "cos"}},
      {{"family", "site-oscillatory"}, {"A", 0.4}}};
  for (const auto& spec : specs) {
    CAPTURE(spec.dump());
    const TimeField q = make_electric_field(spec, lat);
    const PrimitiveQ closed = PrimitiveQ::of(q);
    const PrimitiveQ quad = PrimitiveQ::of(strip_primitive(q));
    CHECK(closed.closed_form());
    CHECK_FALSE(quad.closed_form());
    double worst = 0.0;
    for (int j = 0; j <= 37; ++j) {
      const double t = q.period() * j / 37.0 * 2.3;  // also beyond one period
      for (Index i = 0; i < lat.size(); ++i) worst = std::max(worst, std::abs(closed(i, t) - quad(i, t)));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("site-oscillatory primitive") {
  const auto lat = truncate(PeriodicGraph::lattice_zd(1), 6);
  const double A = 0.6;
  const TimeField q = make_electric_field({{"family", "site-oscillatory"}, {"A", A}}, lat);
  CHECK(q.periodic());
  CHECK(q.period() == doctest::Approx(kTwoPi));
  const PrimitiveQ Q = PrimitiveQ::of(q);
  CHECK(Q.period_residual() <= Q.tol());
  for (Index i = 0; i < lat.size(); ++i) {
    const double m = std::max(1.0, lat.abs_x(i) * lat.abs_x(i));
    for (double t : {0.1, 1.7, 4.4}) {
      CHECK(std::abs(Q(i, t) - A * std::sin(m * t) / m) < 1e-14);
      CHECK(std::abs(Q(i, t + q.period()) - Q(i, t)) < 1e-12);
    }
  }

  // gamma != 1: semi-analytic primitive vs quadrature over a window
  const TimeField qg = make_electric_field({{"family", "site-oscillatory"}, {"A", A}, {"gamma", 0.5}}, lat);
  CHECK_FALSE(qg.periodic());
  PrimitiveOptions opt;
  opt.check_period = false;
  opt.horizon = 10.0;
  const PrimitiveQ semi = PrimitiveQ::of(qg, opt);
  const PrimitiveQ quad = PrimitiveQ::of(strip_primitive(qg), opt);
  for (Index i = 0; i < lat.size(); ++i) {
    for (double t : {0.01, 0.9, 3.3, 9.99}) CHECK(std::abs(semi(i, t) - quad(i, t)) < 1e-9);
  }
}

TEST_CASE("nonzero period mean is rejected") {
  const auto lat = truncate(PeriodicGraph::lattice_zd(1), 3);
  const json spec = {{"family", "tabulated"},
                     {"tau", 1.0},
                     {"times", {0.0, 0.5}},
                     {"samples", {1.0, 0.5}},
                     {"profile", "uniform"}};
  const TimeField q = make_electric_field(spec, lat);
  CHECK(code_of([&] { PrimitiveQ::of(q); }) == ErrorCode::PeriodMeanNonzero);
  const json zero_mean = {{"family", "tabulated"},
                          {"tau", 1.0},
                          {"times", {0.0, 0.25, 0.5, 0.75}},
                          {"samples", {0.0, 1.0, 0.0, -1.0}},
                          {"profile", "uniform"}};
  const PrimitiveQ Q = PrimitiveQ::of(make_electric_field(zero_mean, lat));
  CHECK(std::abs(Q(0, 0.25) - 0.125) < 1e-12);
  CHECK(std::abs(Q(0, 0.5) - 0.25) < 1e-12);
}

TEST_CASE("family registry errors") {
  const auto lat = truncate(PeriodicGraph::lattice_zd(1), 2);
  CHECK(code_of([&] { make_electric_field({{"family", "nope"}}, lat); }) == ErrorCode::UnknownFamily);
  CHECK(code_of([&] { make_magnetic_field({{"family", "nope"}}, lat); }) == ErrorCode::UnknownFamily);
  CHECK(code_of([&] { make_electric_field({{"family", "zero"}, {"bogus", 1}}, lat); }) == ErrorCode::MalformedSpec);
  CHECK(code_of([&] { make_static_potential({{"family", "periodic"}, {"values", {1, 2}}}, lat.graph()); }) ==
        ErrorCode::PotentialShapeMismatch);
  CHECK(code_of([&] { make_static_magnetic({{"family", "whatever"}}, lat.graph()); }) == ErrorCode::UnknownFamily);
  const auto p = make_static_potential({{"family", "defect"}, {"offset", {0}}, {"value", 3.0}}, lat.graph());
  const RVec pv = p.on(lat);
  CHECK(pv(lat.index({0}, 0)) == 3.0);
  CHECK(pv.cwiseAbs().sum() == 3.0);
}

TEST_CASE("magnetic fields are antisymmetric under edge reversal") {
  const auto lat = truncate(PeriodicGraph::lattice_zd(2), 3);
  const TimeField d = make_magnetic_field({{"family", "weighted-sinusoidal"}, {"B", 0.3}, {"decay", 2.0}}, lat);
  const auto& e = lat.edges()[5];
  CHECK(magnetic_value(d, lat, e.x, e.y, 0.3) == doctest::Approx(d(5, 0.3)));
  CHECK(magnetic_value(d, lat, e.y, e.x, 0.3) == doctest::Approx(-d(5, 0.3)));
  CHECK(code_of([&] { magnetic_value(d, lat, 0, lat.size() - 1, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("magnetic difference sine formula") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (const auto& g : {PeriodicGraph::lattice_zd(2), PeriodicGraph::hexagonal(), PeriodicGraph::diamond_chain()}) {
    const auto lat = truncate(g, 4);
    const Index ne = static_cast<Index>(lat.edges().size());
    RVec a(ne), b(ne);
    for (Index e = 0; e < ne; ++e) a(e) = u(rng), b(e) = u(rng);
    const MagneticDifference md = magnetic_difference(lat, a, b);
    const Mat ref = Mat(magnetic_laplacian(lat, b)) - Mat(magnetic_laplacian(lat, a));
    CHECK((Mat(md.F) - ref).cwiseAbs().maxCoeff() <= 1e-12);

    // |delta| <= 2 b_x b_y gives ||F_b|| <= kappa_plus
    const Weight w{1.0, 1.5, 'a', 1.2};
    for (Index e = 0; e < ne; ++e) {
      const auto& ed = lat.edges()[static_cast<std::size_t>(e)];
      b(e) = a(e) + 2.0 * w.b(lat.abs_x(ed.x)) * w.b(lat.abs_x(ed.y)) * (u(rng) / kPi);
    }
    const MagneticDifference mb = magnetic_difference(lat, a, b, w);
    REQUIRE(mb.Fb);
    CHECK(mb.Fb_norm <= g.kappa_plus());
    CHECK(mb.bound_holds);
    const Eigen::BDCSVD<Mat> svd{Mat(*mb.Fb)};
    CHECK(std::abs(svd.singularValues()(0) - mb.Fb_norm) < 1e-6);
  }
  const auto lat = truncate(PeriodicGraph::lattice_zd(1), 2);
  const RVec z = RVec::Zero(static_cast<Index>(lat.edges().size()));
  CHECK(code_of([&] { magnetic_difference(lat, z, z, Weight{0.0, 1.0, 'a', 1.0}); }) == ErrorCode::WeightVanishes);
  CHECK(code_of([&] { magnetic_difference(lat, z, RVec::Zero(1)); }) == ErrorCode::PotentialShapeMismatch);
}

TEST_CASE("shifted decaying potential satisfies VZ_a") {
  const auto lat = truncate(PeriodicGraph::lattice_zd(1), 50);
  const TimeField v = make_electric_field({{"family", "shifted-power-decay"}, {"A", 0.5}, {"a", 2.0}}, lat);
  ConditionInputs in;
  in.lat = &lat;
  in.v = &v;
  in.tau = v.period();
  in.b = Weight{4.0, 1.5, 'a', 1.5};
  const auto rep = check_condition("VZ_a", in);
  CHECK(rep.overall() == Verdict::Pass);
  CHECK(rep.clause("v-bound").measured <= 1.0);
}

TEST_CASE("site-oscillatory electric field satisfies VZ_a") {
  const auto lat = truncate(PeriodicGraph::lattice_zd(1), 50);
  const TimeField q = make_electric_field({{"family", "site-oscillatory"}, {"A", 0.5}}, lat);
  ConditionInputs in;
  in.lat = &lat;
  in.q = &q;
  in.tau = q.period();
  in.b = Weight{4.0, 1.5, 'a', 1.5};
  const auto rep = check_condition("VZ_a", in);
  for (const auto& c : rep.clauses) CAPTURE(c.clause);
  CHECK(rep.overall() == Verdict::Pass);
  CHECK(rep.clause("Q-decay").verdict == Verdict::Pass);
  CHECK(rep.clause("Q-period").verdict == Verdict::Pass);
}

TEST_CASE("zero fields pass every condition") {
  const auto lat = truncate(PeriodicGraph::lattice_zd(3), 3);
  const auto g = lat.graph();
  const TimeField zd = TimeField::zero(FieldKind::MagneticEdge, static_cast<Index>(lat.edges().size()), 1.0);
  const TimeField zv = TimeField::zero(FieldKind::ElectricVertex, lat.size(), 1.0);
  const auto alpha = StaticMagneticPotential::zero(lat.graph());
  const SpMat h0 = magnetic_laplacian(lat, alpha);
  for (const std::string name : {"MZ_p", "MZ_a", "VZ_p", "VZ_a", "M", "V", "H", "R"}) {
    ConditionInputs in;
    in.lat = &lat;
    in.delta = &zd;
    in.v = &zv;
    in.q = &zv;
    in.h0 = &h0;
    in.time_samples = 32;
    in.w = TimeEnvelope{"gaussian", 2.0, 1.0};
    const bool p_class = name == "MZ_p" || name == "VZ_p" || name == "R";
    in.b = p_class ? Weight{1.0, 3.0, 'p', 1.1} : Weight{1.0, 2.0, 'a', 1.5};
    const auto rep = check_condition(name, in);
    CAPTURE(name);
    CHECK(rep.overall() == Verdict::Pass);
    std::set<std::string> seen;
    for (const auto& c : rep.clauses) CHECK(seen.insert(c.clause).second);
    CHECK(rep.to_json().at("clauses").size() == rep.clauses.size());
  }
}

TEST_CASE("condition errors and failing clauses") {
  const auto lat = truncate(PeriodicGraph::lattice_zd(1), 10);
  ConditionInputs in;
  in.lat = &lat;
  CHECK(code_of([&] { check_condition("Q", in); }) == ErrorCode::UnknownCondition);
  CHECK(code_of([&] { check_condition("MZ_a", in); }) == ErrorCode::MissingWeight);
  CHECK(code_of([&] { check_condition("R", in); }) == ErrorCode::MissingWeight);
  in.b = Weight{1.0, 2.0, 'a', 1.5};
  CHECK(code_of([&] { check_condition("MZ_p", in); }) == ErrorCode::MissingWeight);

  // large uniform magnetic drive violates |beta| <= 2 b_x b_y far out
  const TimeField d = make_magnetic_field({{"family", "uniform-sinusoidal"}, {"B", 0.5}}, lat);
  in.delta = &d;
  const auto rep = check_condition("MZ_a", in);
  CHECK(rep.clause("magnetic-bound").verdict == Verdict::Fail);
  CHECK(rep.overall() == Verdict::Fail);

  // class a weights need a > 1 and a <= decay
  in.delta = nullptr;
  in.b = Weight{1.0, 1.0, 'a', 1.5};
  CHECK(check_condition("VZ_a", in).clause("weight-class").verdict == Verdict::Fail);
  // class p is only defined from d = 3 on
  in.b = Weight{1.0, 4.0, 'p', 1.1};
  CHECK(check_condition("VZ_p", in).clause("weight-class").verdict == Verdict::Fail);

  // slowly decaying v: truncated sum cannot settle V
  const TimeField v = make_electric_field({{"family", "power-decay-sinusoidal"}, {"A", 0.2}, {"a", 0.5}}, lat);
  in.v = &v;
  const auto rv = check_condition("V", in);
  CHECK(rv.clause("v-L1-l1").verdict == Verdict::Unverifiable);
  CHECK(rv.overall() == Verdict::Unverifiable);
}
