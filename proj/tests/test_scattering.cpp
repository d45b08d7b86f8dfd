#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

#include "floqscat/error.hpp"
#include "floqscat/scattering.hpp"

using namespace floqscat;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

std::shared_ptr<const FiniteLattice> z1(int L) {
  return std::make_shared<const FiniteLattice>(truncate(PeriodicGraph::lattice_zd(1), L));
}

DrivenHamiltonian bare(const std::shared_ptr<const FiniteLattice>& lat, double tau,
                       StaticElectricPotential p = StaticElectricPotential::zero(PeriodicGraph::lattice_zd(1))) {
  return DrivenHamiltonian(lat, StaticMagneticPotential::zero(lat->graph()), std::move(p), tau);
}

SpMat free_laplacian(const FiniteLattice& lat) {
  return magnetic_laplacian(lat, StaticMagneticPotential::zero(lat.graph()));
}

StaticElectricPotential origin_defect(double value) {
  auto p = StaticElectricPotential::zero(PeriodicGraph::lattice_zd(1));
  p.defects.push_back({{0}, 0, value});
  return p;
}

}  // namespace

TEST_CASE("packet and participation ratio") {
  auto lat = z1(30);
  const Vec f = gaussian_packet(*lat, {0.0}, 3.0, {0.5});
  CHECK(std::abs(f.norm() - 1.0) <= 1e-14);
  CHECK(participation_ratio(Vec::Constant(lat->size(), 1.0)) == doctest::Approx(1.0));
  Vec delta = Vec::Zero(lat->size());
  delta(5) = 1.0;
  CHECK(participation_ratio(delta) == doctest::Approx(1.0 / lat->size()));
  CHECK(code_of([&] { gaussian_packet(*lat, {0.0, 1.0}, 3.0, {0.5}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("zero driving: W_n f = f") {
  auto lat = z1(40);
  const DrivenHamiltonian h = bare(lat, 1.0);
  ScatteringOptions opt;
  opt.n_periods = 20;
  opt.steps_per_period = 4;
  const Vec f = gaussian_packet(*lat, {0.0}, 2.0, {1.0});
  const auto r = wave_operator_apply(h, h.comparison(), f, opt);
  for (double d : r.decrements) CHECK(d <= 1e-12);
  for (double d : r.isometry) CHECK(d <= 1e-12);
  CHECK((r.final_state - f).norm() <= 1e-12);
  CHECK(r.verdict == "pass");
  CHECK(r.times.size() == 21);
  CHECK(r.decrements.size() == 20);
}

TEST_CASE("literal decrements agree with the one-step identity") {
  auto lat = z1(30);
  DrivenHamiltonian h = bare(lat, 1.0);
  h.with_potential(make_electric_field({{"family", "power-decay-sinusoidal"}, {"A", 0.8}, {"a", 2.0}}, *lat));
  h.with_magnetic(make_magnetic_field({{"family", "weighted-sinusoidal"}, {"B", 0.3}, {"decay", 2.0}}, *lat));
  const SpMat d = free_laplacian(*lat);
  const auto ops = ScatteringOperators::build(h, d, 128);
  ScatteringOptions opt;
  opt.n_periods = 12;
  opt.strict_boundary = false;
  const Vec f = gaussian_packet(*lat, {0.0}, 2.0, {kPi / 2});
  const auto r = wave_operator_apply(ops, *lat, f, opt);
  // oracle: ||W_{n+1} f - W_n f|| = ||M a_n - a_{n+1}||, a_n = e^{-in Delta} f via a dense exponential
  const Mat E = expm_hermitian(Mat(d), 1.0);
  Vec a = f;
  for (int n = 0; n < opt.n_periods; ++n) {
    const Vec a1 = E * a;
    const double oracle = (ops.M * a - a1).norm();
    CHECK(std::abs(r.decrements[static_cast<std::size_t>(n)] - oracle) <= 1e-10);
    CHECK(std::abs(r.intertwining[static_cast<std::size_t>(n)] - r.decrements[static_cast<std::size_t>(n)]) <= 1e-10);
    a = a1;
  }
  for (double d0 : r.isometry) CHECK(d0 <= 1e-10);
  CHECK(r.decrements.front() > 1e-3);
}

TEST_CASE("input validation and boundary contamination") {
  auto lat = z1(12);
  const DrivenHamiltonian h = bare(lat, 1.0);
  const auto ops = ScatteringOperators::build(h, h.comparison(), 4);
  ScatteringOptions opt;
  opt.n_periods = 30;
  Vec f = gaussian_packet(*lat, {0.0}, 2.0, {kPi / 2});
  CHECK(code_of([&] { wave_operator_apply(ops, *lat, Vec(2.0 * f), opt); }) == ErrorCode::NonNormalizedInput);
  // the packet moves at unit speed and reaches the edge of [-12, 12] well before n = 30
  CHECK(code_of([&] { wave_operator_apply(ops, *lat, f, opt); }) == ErrorCode::BoundaryContamination);
  opt.strict_boundary = false;
  const auto r = wave_operator_apply(ops, *lat, f, opt);
  CHECK(r.contaminated);
  CHECK(r.verdict == "boundary-contaminated");
  CHECK(r.boundary.front() < 1e-6);
  CHECK(r.boundary.back() > 1e-6);
  const json j = r.to_json();
  CHECK(j.at("verdict") == "boundary-contaminated");
  CHECK(r.to_csv().find("n,t,norm,decrement") == 0);
}

TEST_CASE("ac projector drops the defect bound state") {
  auto lat = z1(40);
  const auto g = PeriodicGraph::lattice_zd(1);
  const auto a0 = StaticMagneticPotential::zero(g);
  const Mat h = Mat(schrodinger(*lat, a0, origin_defect(3.0)));
  const auto bands = band_structure(g, a0, {0.0}, 128);
  const Mat P = ac_projector(h, bands);
  CHECK((P * P - P).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((P - P.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(P.trace().real() - (lat->size() - 1)) <= 1e-9);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Vec bound = es.eigenvectors().col(lat->size() - 1);
  CHECK((P * bound).norm() <= 1e-10);

  const auto ops = ScatteringOperators::from_monodromy(expm_hermitian(h, 1.0), free_laplacian(*lat), 1.0);
  const Mat Pm = monodromy_ac_projector(ops.M);
  CHECK(std::abs(Pm.trace().real() - (lat->size() - 1)) <= 1e-6);
}

TEST_CASE("adjoint probe does not converge on a bound state") {
  auto lat = z1(40);
  const auto g = PeriodicGraph::lattice_zd(1);
  const Mat h = Mat(schrodinger(*lat, StaticMagneticPotential::zero(g), origin_defect(3.0)));
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Vec bound = es.eigenvectors().col(lat->size() - 1);
  const auto ops = ScatteringOperators::from_monodromy(expm_hermitian(h, 1.0), free_laplacian(*lat), 1.0);
  ScatteringOptions opt;
  opt.n_periods = 30;
  opt.strict_boundary = false;
  const auto r = adjoint_wave_probe(ops, *lat, bound, opt);
  CHECK(r.verdict == "not-converged");
  for (std::size_t n = 5; n < r.decrements.size(); ++n) CHECK(r.decrements[n] > 0.1);
  for (std::size_t n = 0; n < r.intertwining.size(); ++n) CHECK(std::abs(r.intertwining[n] - r.decrements[n]) <= 1e-10);
}

TEST_CASE("time-decaying scenario") {
  auto lat = z1(60);
  const Vec f = gaussian_packet(*lat, {0.0}, 3.0, {kPi / 2});
  TimeDecayingOptions opt;
  opt.t_max = 10.0;
  opt.steps_per_sample = 16;
  const DrivenHamiltonian h0 = bare(lat, kTwoPi);
  const auto r0 = time_decaying_scenario(h0, h0.comparison(), *lat, f, opt);
  for (double d : r0.decrements) CHECK(d <= 1e-12);
  for (double d : r0.adjoint_decrements) CHECK(d <= 1e-12);
  CHECK((r0.final_state - f).norm() <= 1e-11);
  CHECK(r0.verdict == "pass");

  DrivenHamiltonian h = bare(lat, kTwoPi);
  h.with_potential(make_electric_field(
      {{"family", "shifted-power-decay"}, {"A", 0.5}, {"envelope", {{"kind", "gaussian"}, {"scale", 2.0}}}}, *lat));
  opt.steps_per_sample = 64;
  const auto r = time_decaying_scenario(h, h.comparison(), *lat, f, opt);
  CHECK(r.decrements.front() > 1e-3);
  CHECK(r.decrements.back() < 1e-6);
  CHECK(r.isometry.front() <= 1e-10);
  CHECK(r.converged);
}

TEST_CASE("weighted resolvent: Lanczos norm matches a dense SVD") {
  auto lat = z1(25);
  const RVec w = rho_weight(*lat, 1.0);
  const Mat d = Mat(free_laplacian(*lat));
  const std::vector<cplx> lams = {{-10.0, 0.0}, {1.0, 0.1}, {0.5, 0.02}, {3.0, 0.0}};
  const auto s = weighted_resolvent_sample(*lat, w, lams);
  for (std::size_t i = 0; i < lams.size(); ++i) {
    const Mat R = (d - lams[i] * Mat::Identity(d.rows(), d.cols())).inverse();
    const Mat A = w.cast<cplx>().asDiagonal() * R * w.cast<cplx>().asDiagonal();
    const double oracle = Eigen::JacobiSVD<Mat>(A).singularValues()(0);
    CHECK(s[i].norm == doctest::Approx(oracle).epsilon(1e-8));
  }
  CHECK(s[0].varrho == doctest::Approx(10.0));
  CHECK(s[1].varrho == doctest::Approx(0.1));
  CHECK(s[3].varrho == doctest::Approx(1.0));
  // far from the spectrum the leading Neumann term dominates
  CHECK(s[0].norm <= s[0].neumann);
  CHECK(s[0].norm >= 0.8 * s[0].neumann);
}

TEST_CASE("weighted resolvent: bounded in the band interior, growing at a threshold") {
  auto lat = z1(600);
  const RVec w = rho_weight(*lat, 1.0);
  const auto inner = weighted_resolvent_sample(*lat, w, {{1.0, 0.1}, {1.0, 0.05}, {1.0, 0.02}});
  CHECK(inner[2].norm <= 1.2 * inner[0].norm);
  CHECK_FALSE(inner[0].near_threshold);
  const auto edge = weighted_resolvent_sample(*lat, w, {{0.0, 0.1}, {0.0, 0.01}});
  CHECK(edge[1].norm >= 2.0 * edge[0].norm);
  CHECK(edge[1].near_threshold);
  CHECK(to_json(edge).size() == 2);
}
