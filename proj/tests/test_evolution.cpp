#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <random>

#include "floqscat/error.hpp"
#include "floqscat/evolution.hpp"

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

Mat random_hermitian(Index n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  return scale * 0.5 * (a + a.adjoint()) / std::sqrt(static_cast<double>(n));
}

std::shared_ptr<const FiniteLattice> z1(int L) {
  return std::make_shared<const FiniteLattice>(truncate(PeriodicGraph::lattice_zd(1), L));
}

DrivenHamiltonian driven_z1(int L, double tau = 1.0) {
  auto lat = z1(L);
  DrivenHamiltonian h(lat, StaticMagneticPotential::zero(lat->graph()), StaticElectricPotential::zero(lat->graph()),
                      tau);
  h.with_potential(make_electric_field({{"family", "exp-decay-sinusoidal"}, {"A", 1.0}, {"length", 1.0}, {"tau", tau}},
                                       *lat));
  return h;
}

}  // namespace

TEST_CASE("one-site constant generator") {
  const FunctionGenerator h(1, 1.0, [](double) { return Mat::Constant(1, 1, cplx(0.7, 0.0)); });
  Vec f(1);
  f(0) = cplx(0.3, -0.4);
  const Vec u = propagate(h, f, 0.2, 2.9, 5);
  CHECK(std::abs(u(0) - std::exp(cplx(0.0, -0.7 * 2.7)) * f(0)) < 1e-14);
  CHECK(propagator(h, 1.0, 1.0, 3).U == Mat::Identity(1, 1));
}

TEST_CASE("static magnetic generator matches the exponential") {
  std::mt19937_64 rng(5);
  auto lat = z1(10);
  const auto alpha = StaticMagneticPotential::random(lat->graph(), rng);
  DrivenHamiltonian h(lat, alpha, StaticElectricPotential::constant(lat->graph(), 0.3), 1.0);
  std::normal_distribution<double> g;
  Vec f(lat->size());
  for (Index i = 0; i < f.size(); ++i) f(i) = cplx(g(rng), g(rng));
  const Vec u = propagate(h, f, 0.0, 1.7, 7);
  const Vec ref = expm_hermitian(Mat(h.comparison()), 1.7) * f;
  CHECK((u - ref).norm() <= 1e-10 * f.norm());
  for (auto m : {ExpMethod::Dense, ExpMethod::Krylov, ExpMethod::Taylor}) {
    StepOptions opt;
    opt.exp.method = m;
    CHECK((propagate(h, f, 0.0, 1.7, 3, opt) - ref).norm() <= 1e-10 * f.norm());
  }
}

TEST_CASE("midpoint stepping is second order") {
  const DrivenHamiltonian h = driven_z1(20);
  Vec f = Vec::Zero(h.dim());
  f(20) = 1.0;
  f(21) = cplx(0.0, 1.0);
  f.normalize();
  const Vec a = propagate(h, f, 0.0, 1.0, 32);
  const Vec b = propagate(h, f, 0.0, 1.0, 64);
  const Vec c = propagate(h, f, 0.0, 1.0, 128);
  const double slope = std::log2((a - b).norm() / (b - c).norm());
  CHECK(slope > 1.8);
  CHECK(slope < 2.2);
}

TEST_CASE("unitarity, group law and periodicity transport") {
  const DrivenHamiltonian h = driven_z1(15);
  const auto [per, herm] = h.sample_checks();
  CHECK(per <= 1e-14);
  CHECK(herm == 0.0);
  const Mat U21 = propagator(h, 0.25, 0.75, 256).U;
  const Mat U10 = propagator(h, 0.0, 0.25, 128).U;
  const Mat U20 = propagator(h, 0.0, 0.75, 384).U;
  CHECK(unitarity_defect(U20) <= 1e-10);
  CHECK((U21 * U10 - U20).cwiseAbs().maxCoeff() <= 1e-8);
  const Mat Us = propagator(h, 1.0, 1.75, 384).U;
  CHECK((Us - U20).cwiseAbs().maxCoeff() <= 1e-8);
  // backward propagation inverts forward propagation on the same grid
  const Mat Ub = propagator(h, 0.75, 0.0, 384).U;
  CHECK((Ub * U20 - Mat::Identity(h.dim(), h.dim())).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("Dyson series") {
  // J = 0 gives the free propagator
  std::mt19937_64 rng(9);
  const Mat h0 = random_hermitian(5, rng, 1.0);
  const Mat v0 = random_hermitian(5, rng, 0.5);
  auto V = [&](double t) -> Mat { return std::cos(3.0 * t) * v0; };
  const Propagator p0 = dyson_propagator(h0, V, 0.1, 0.9, 0);
  CHECK((p0.U - expm_hermitian(h0, 0.8)).cwiseAbs().maxCoeff() <= 1e-13);

  // scalar: h0 = 0, V = v with v (t - s) = 1
  const Propagator ps = dyson_propagator(Mat::Zero(1, 1), [](double) { return Mat::Constant(1, 1, 0.5); }, 0.0, 2.0, 8);
  const double err = std::abs(ps.U(0, 0) - std::exp(cplx(0.0, -1.0)));
  CHECK(err <= 2.8e-6);
  CHECK(err <= ps.tail_bound);
  CHECK(ps.A == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(dyson_order_for(1.0, 1e-8) == 11);
  CHECK(dyson_tail(1.0, 8) == doctest::Approx(std::exp(1.0) - 2.71827876984127).epsilon(1e-6));

  // against stepping and the Duhamel bound
  for (int trial = 0; trial < 4; ++trial) {
    const Index n = 3 + trial * 3;
    const Mat a = random_hermitian(n, rng, 1.0);
    const Mat b = random_hermitian(n, rng, 0.8);
    const Mat c = random_hermitian(n, rng, 0.8);
    auto Vt = [&](double t) -> Mat { return std::cos(kTwoPi * t) * b + std::sin(2.0 * t) * c; };
    const FunctionGenerator gen(n, 1.0, [&](double t) { return Mat(a + Vt(t)); });
    const Mat Us = propagator(gen, 0.0, 1.0, 4096).U;
    const Propagator pd = dyson_propagator(a, Vt, 0.0, 1.0, 40);
    const int J = dyson_order_for(pd.A, 1e-8);
    const Propagator pj = dyson_propagator(a, Vt, 0.0, 1.0, J);
    CHECK(pj.tail_bound <= 1e-8);
    CHECK(op_norm(pj.U - Us) <= 1e-6);
    CHECK(op_norm(Us - expm_hermitian(a, 1.0)) <= pj.duhamel_bound);
  }

  DysonOptions tight;
  tight.quad_tol = 0.0;
  tight.max_intervals = 128;
  CHECK(code_of([&] { dyson_propagator(h0, V, 0.0, 1.0, 3, tight); }) == ErrorCode::QuadratureBudgetExceeded);
}

TEST_CASE("autonomous monodromy and quasienergies") {
  std::mt19937_64 rng(2);
  auto lat = z1(12);
  const double tau = 2.3;
  DrivenHamiltonian h(lat, StaticMagneticPotential::random(lat->graph(), rng),
                      StaticElectricPotential::constant(lat->graph(), 1.7), tau);
  const Mat M = monodromy(h, 0.4, 16).U;
  CHECK((M - expm_hermitian(Mat(h.comparison()), tau)).cwiseAbs().maxCoeff() <= 1e-10);
  QuasienergyOptions qo;
  qo.eigenvectors = true;
  const QuasienergySpectrum q = quasienergy_spectrum(M, tau, qo);
  REQUIRE(q.lambda.size() == h.dim());
  const RVec ev = Eigen::SelfAdjointEigenSolver<Mat>(Mat(h.comparison())).eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) {
    double best = 1e9;
    for (Index j = 0; j < q.lambda.size(); ++j) best = std::min(best, circular_distance(ev(i), q.lambda(j), q.omega));
    CHECK(best <= 1e-9);
  }
  for (Index j = 0; j < q.lambda.size(); ++j) {
    CHECK(q.lambda(j) >= 0.0);
    CHECK(q.lambda(j) < q.omega);
    CHECK((M * q.vectors->col(j) - q.mu(j) * q.vectors->col(j)).norm() <= 1e-9);
  }

  // shifting the comparison operator by omega leaves the folded set unchanged
  const Mat Mshift = expm_hermitian(Mat(h.comparison()) + q.omega * Mat::Identity(h.dim(), h.dim()), tau);
  const QuasienergySpectrum qs = quasienergy_spectrum(Mshift, tau);
  for (Index j = 0; j < q.lambda.size(); ++j) CHECK(circular_distance(qs.lambda(j), q.lambda(j), q.omega) <= 1e-9);

  const QuasienergySpectrum qi = quasienergy_spectrum(Mat::Identity(4, 4), 1.0);
  CHECK(qi.lambda.cwiseAbs().maxCoeff() == 0.0);
  CHECK(qi.multiplicity == std::vector<int>{4});
  CHECK(fold_quasienergy(cplx(-1.0, 0.0), 1.0) == doctest::Approx(kPi));
  CHECK(fold_quasienergy(std::exp(cplx(0.0, 1e-16)), 1.0) == 0.0);
  CHECK(code_of([] { quasienergy_spectrum(2.0 * Mat::Identity(3, 3), 1.0); }) == ErrorCode::NonUnitaryInput);
}

TEST_CASE("driven monodromy identities and Floquet modes") {
  const DrivenHamiltonian h = driven_z1(10);
  CHECK(conjugacy_defect(h, 0.25, 512) <= 1e-8);
  CHECK(shift_defect(h, 0.25, 512) <= 1e-8);
  CHECK(code_of([&] { conjugacy_defect(h, 0.1234567, 512); }) == ErrorCode::InvalidArgument);

  const Mat M = monodromy(h, 0.0, 512).U;
  QuasienergyOptions qo;
  qo.eigenvectors = true;
  const QuasienergySpectrum q = quasienergy_spectrum(M, 1.0, qo);
  const Vec psi = q.vectors->col(0);
  CHECK(floquet_mode_check(h, q.lambda(0), psi, 512, 8) <= 1e-7);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Vec r(h.dim());
  for (Index i = 0; i < r.size(); ++i) r(i) = cplx(g(rng), g(rng));
  CHECK(code_of([&] { floquet_mode_check(h, q.lambda(0), r, 512, 8); }) == ErrorCode::NotAnEigenpair);

  // autonomous case: eigenvectors of h_alpha
  auto lat = z1(6);
  DrivenHamiltonian h0(lat, StaticMagneticPotential::zero(lat->graph()), StaticElectricPotential::zero(lat->graph()),
                       1.0);
  Eigen::SelfAdjointEigenSolver<Mat> es{Mat(h0.comparison())};
  for (Index j = 0; j < 3; ++j) {
    const double lam = fold_quasienergy(std::exp(cplx(0.0, -es.eigenvalues()(j))), 1.0);
    CHECK(floquet_mode_check(h0, lam, es.eigenvectors().col(j), 64, 8, 1e-9) <= 1e-9);
  }
}

TEST_CASE("averaged step rule resolves fast q") {
  auto lat = z1(3);
  const json q = {{"family", "profile-sinusoidal"}, {"A", 2.0}, {"profile", "gaussian"}, {"width", 1.0}, {"harmonic", 40}};
  DrivenHamiltonian mid(lat, StaticMagneticPotential::zero(lat->graph()), StaticElectricPotential::zero(lat->graph()),
                        1.0);
  mid.with_q(make_electric_field(q, *lat));
  DrivenHamiltonian avg = mid;
  avg.with_step_rule(StepRule::Averaged);
  Vec f = Vec::Zero(mid.dim());
  f(3) = 1.0;
  const Vec ref = propagate(mid, f, 0.0, 0.61, 1 << 14);
  const double e_mid = (propagate(mid, f, 0.0, 0.61, 64) - ref).norm();
  const double e_avg = (propagate(avg, f, 0.0, 0.61, 64) - ref).norm();
  CHECK(e_avg < 0.1 * e_mid);
  CHECK(e_avg < 1e-3);
  CHECK(step_rule_from_string("averaged") == StepRule::Averaged);
}

TEST_CASE("generator errors and matrix dump") {
  const FunctionGenerator bad(2, 1.0, [](double) {
    Mat m(2, 2);
    m << 0, 1, 0, 0;
    return m;
  });
  StepOptions opt;
  opt.check_hermitian = true;
  CHECK(code_of([&] { propagate(bad, Vec::Ones(2), 0.0, 1.0, 2, opt); }) == ErrorCode::NonHermitianSample);
  CHECK(code_of([&] { propagate(bad, Vec::Ones(2), 0.0, 1.0, 0); }) == ErrorCode::InvalidArgument);

  std::mt19937_64 rng(4);
  const Mat m = random_hermitian(7, rng, 1.0);
  const std::string path = "evolution_dump_test.bin";
  save_matrix(m, path);
  CHECK(load_matrix(path) == m);
  std::remove(path.c_str());
}

TEST_CASE("block Taylor agrees with column-wise application") {
  auto h = driven_z1(40);
  const SpMat a = h.comparison();
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  Mat block(a.rows(), 5);
  for (Index i = 0; i < block.rows(); ++i)
    for (Index j = 0; j < block.cols(); ++j) block(i, j) = cplx(g(rng), g(rng));
  ExpOptions opt;
  opt.method = ExpMethod::Taylor;
  const Mat start = block;
  Mat cols = block;
  for (Index j = 0; j < cols.cols(); ++j) {
    Vec v = cols.col(j);
    expm_apply(a, 0.9, v, opt);
    cols.col(j) = v;
  }
  expm_apply_block(a, 0.9, block, opt);
  CHECK((block - cols).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((block - expm_hermitian(Mat(a), 0.9) * start).cwiseAbs().maxCoeff() <= 1e-11);
}
