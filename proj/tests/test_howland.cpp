#include <doctest.h>

#include <cmath>
#include <random>

#include "floqscat/error.hpp"
#include "floqscat/howland.hpp"

using namespace floqscat;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

Mat random_hermitian(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

// random modes |n| <= band with geometric decay
HowlandVector random_modes(Index dim, int n_max, int band, double tau, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  HowlandVector f = HowlandVector::zero(dim, n_max, tau);
  for (int n = -band; n <= band; ++n)
    for (Index i = 0; i < dim; ++i) f.mode(n)(i) = std::pow(0.8, std::abs(n)) * cplx(g(rng), g(rng));
  return f;
}

double rel_grid_error(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += (a[j] - b[j]).squaredNorm();
    den += b[j].squaredNorm();
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("mode resolvent basics") {
  std::mt19937_64 rng(8);
  const double tau = 0.9;
  const Mat h0 = random_hermitian(4, rng);
  const cplx lambda(0.3, 1.0);

  HowlandVector f = HowlandVector::zero(4, 5, tau);
  f.mode(0) = Vec::Random(4);
  const HowlandVector g = free_resolvent_modes(h0, lambda, f);
  const Vec ref = (h0 - lambda * Mat::Identity(4, 4)).lu().solve(f.mode(0));
  CHECK((g.mode(0) - ref).norm() <= 1e-12);
  for (int n = -5; n <= 5; ++n) {
    if (n != 0) CHECK(g.mode(n).norm() == 0.0);
  }

  const double mu = 0.7;
  const HowlandVector fs = random_modes(1, 6, 6, tau, rng);
  const HowlandVector gs = free_resolvent_modes(Mat::Constant(1, 1, mu), lambda, fs);
  for (int n = -6; n <= 6; ++n) CHECK(std::abs(gs.mode(n)(0) - fs.mode(n)(0) / (mu + fs.omega() * n - lambda)) < 1e-14);

  const HowlandVector fr = random_modes(4, 10, 10, tau, rng);
  const HowlandVector gr = free_resolvent_modes(h0, cplx(0.0, 1.0), fr);
  const HowlandVector back = free_forward_apply(h0, cplx(0.0, 1.0), gr);
  double err = 0.0;
  for (int n = -10; n <= 10; ++n) err = std::max(err, (back.mode(n) - fr.mode(n)).norm());
  CHECK(err <= 1e-12);

  const Mat d = Mat::Constant(1, 1, 0.5);
  CHECK(code_of([&] { free_resolvent_modes(d, 0.5 + 2.0 * fs.omega(), fs); }) == ErrorCode::SpectrumHit);
}

TEST_CASE("grid and mode transforms are isometric") {
  std::mt19937_64 rng(3);
  const HowlandVector f = random_modes(3, 64, 40, 1.0, rng);
  const std::vector<Vec> grid = to_grid(f, 128);
  CHECK(std::abs(grid_norm(grid) - f.norm()) <= 1e-10 * f.norm());
  const HowlandVector back = to_modes(grid, 1.0, 64);
  double err = 0.0;
  for (int n = -64; n <= 64; ++n) err = std::max(err, (back.mode(n) - f.mode(n)).norm());
  CHECK(err <= 1e-12);
  CHECK(back.tail_mass <= 1e-20 + 1e-12 * f.norm() * f.norm());

  // the Nyquist mode goes to n = -M/2, n = +M/2 stays empty
  std::vector<Vec> alt(8, Vec::Ones(1));
  for (int j = 0; j < 8; ++j) alt[j](0) = j % 2 ? -1.0 : 1.0;
  const HowlandVector fa = to_modes(alt, 1.0, 4);
  CHECK(std::abs(fa.mode(-4)(0) - 1.0) < 1e-14);
  CHECK(std::abs(fa.mode(4)(0)) == 0.0);
}

TEST_CASE("kernel formula agrees with the mode resolvent") {
  std::mt19937_64 rng(21);
  const double tau = 1.3;
  for (Index dim : {1, 8}) {
    const Mat h0 = dim == 1 ? Mat::Constant(1, 1, 0.4) : random_hermitian(dim, rng);
    for (cplx lambda : {cplx(0.0, 1.0), cplx(1.1, 0.05), cplx(-2.0, 0.3)}) {
      const HowlandVector f = random_modes(dim, 64, 30, tau, rng);
      const std::vector<Vec> grid = to_grid(f, 128);
      const std::vector<Vec> kern = free_resolvent_kernel(h0, lambda, grid, tau);
      const std::vector<Vec> modes = to_grid(free_resolvent_modes(h0, lambda, to_modes(grid, tau, 64)), 128);
      CHECK(rel_grid_error(kern, modes) <= 1e-6);
      CHECK(omega_shift_defect(h0, lambda, grid, tau) <= 1e-8);
    }
  }
}

TEST_CASE("trapezoid kernel converges at second order") {
  std::mt19937_64 rng(4);
  const double tau = 1.0;
  const Mat h0 = random_hermitian(3, rng);
  const cplx lambda(0.2, 0.7);
  const HowlandVector f = random_modes(3, 8, 3, tau, rng);
  std::vector<double> err;
  for (int M : {64, 128, 256}) {
    const std::vector<Vec> grid = to_grid(f, M);
    const std::vector<Vec> exact = to_grid(free_resolvent_modes(h0, lambda, f), M);
    err.push_back(rel_grid_error(free_resolvent_kernel(h0, lambda, grid, tau, KernelQuadrature::Trapezoid), exact));
  }
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.15));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("kernel special cases") {
  const std::vector<Vec> c(16, Vec::Constant(1, cplx(0.3, -0.2)));
  const auto r = free_resolvent_kernel(Mat::Zero(1, 1), cplx(0.0, 1.0), c, 2.0);
  for (const auto& v : r) CHECK(std::abs(v(0) - cplx(0.0, 1.0) * cplx(0.3, -0.2)) <= 1e-8);
  CHECK(code_of([&] { free_resolvent_kernel(Mat::Zero(1, 1), kTwoPi / 2.0, c, 2.0); }) == ErrorCode::ResonantPeriod);

  // omega shift on the mode ladder
  std::mt19937_64 rng(6);
  const Mat h0 = random_hermitian(2, rng);
  const HowlandVector f = random_modes(2, 12, 10, 1.0, rng);
  const cplx lambda(0.5, 0.4);
  const HowlandVector lhs = mode_shift(free_resolvent_modes(h0, lambda, mode_shift(f, -1)), 1);
  const HowlandVector rhs = free_resolvent_modes(h0, lambda + f.omega(), f);
  double err = 0.0;
  for (int n = -12; n <= 12; ++n) err = std::max(err, (lhs.mode(n) - rhs.mode(n)).norm());
  CHECK(err <= 1e-12);
}

TEST_CASE("free quasienergy spectrum") {
  const auto z1 = free_quasienergy_spectrum({{0.0, 2.0}}, 3.0, -6.0, 8.5);
  REQUIRE(z1.intervals.size() == 5);
  CHECK(z1.has_gaps);
  for (int i = 0; i < 5; ++i) {
    CHECK(z1.intervals[i].first == doctest::Approx(-6.0 + 3.0 * i));
    CHECK(z1.intervals[i].second == doctest::Approx(-4.0 + 3.0 * i));
  }
  const auto dense = free_quasienergy_spectrum({{0.0, 2.0}}, 1.5, -10.0, 10.0);
  REQUIRE(dense.intervals.size() == 1);
  CHECK_FALSE(dense.has_gaps);
  CHECK(dense.intervals[0].first == -10.0);
  CHECK(dense.intervals[0].second == 10.0);
  const auto pt = free_quasienergy_spectrum({{0.3, 0.3}}, 1.0, 0.0, 3.0);
  REQUIRE(pt.intervals.size() == 3);
  CHECK(pt.intervals[2].first == doctest::Approx(2.3));
  CHECK(pt.intervals[2].second == doctest::Approx(2.3));
}
