#include <doctest.h>

#include <random>
#include <vector>

#include "floqscat/kernels.hpp"

using namespace floqscat::simd;

namespace {

struct RandomCsr {
  std::vector<std::int32_t> row_ptr{0}, col_idx;
  std::vector<cplx> values;
  CsrView view(std::ptrdiff_t rows) const { return {rows, row_ptr.data(), col_idx.data(), values.data()}; }
};

std::vector<cplx> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

std::vector<Isa> variants() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (available(isa)) out.push_back(isa);
  }
  return out;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("scalar kernels match textbook formulas") {
  const auto& s = table(Isa::Scalar);
  std::vector<cplx> x{{1, 2}, {3, -1}, {0, 1}};
  std::vector<cplx> y{{2, 0}, {1, 1}, {-1, 0}};
  CHECK(s.norm2(3, x.data()) == doctest::Approx(1 + 4 + 9 + 1 + 1));
  const cplx d = s.dot(3, x.data(), y.data());
  cplx ref = 0.0;
  for (int i = 0; i < 3; ++i) ref += std::conj(x[i]) * y[i];
  CHECK(std::abs(d - ref) < 1e-15);
  s.axpy(3, {0, 1}, x.data(), y.data());
  CHECK(std::abs(y[0] - cplx(2, 0) - cplx(0, 1) * cplx(1, 2)) < 1e-15);
}

TEST_CASE("SIMD variants are equivalent to the scalar reference") {
  const auto& ref = table(Isa::Scalar);
  std::mt19937_64 rng(7);
  for (Isa isa : variants()) {
    CAPTURE(to_string(isa));
    const auto& k = table(isa);
    for (std::size_t n : {0u, 1u, 2u, 3u, 7u, 64u, 1001u}) {
      CAPTURE(n);
      auto x = random_vec(n, rng);
      auto y0 = random_vec(n, rng);
      auto y1 = y0;
      const cplx a{0.3, -1.7};
      ref.axpy(n, a, x.data(), y0.data());
      k.axpy(n, a, x.data(), y1.data());
      CHECK(max_diff(y0, y1) < 1e-13);
      CHECK(std::abs(ref.norm2(n, x.data()) - k.norm2(n, x.data())) <= 1e-12 * (1.0 + ref.norm2(n, x.data())));
      CHECK(std::abs(ref.dot(n, x.data(), y0.data()) - k.dot(n, x.data(), y0.data())) < 1e-11 * (1.0 + n));
      auto d = random_vec(n, rng);
      auto z0 = x, z1 = x;
      ref.diag_mul(n, d.data(), z0.data());
      k.diag_mul(n, d.data(), z1.data());
      CHECK(max_diff(z0, z1) < 1e-13);
    }
    // CSR with empty, odd and even row lengths
    const std::ptrdiff_t rows = 97;
    RandomCsr m;
    std::uniform_int_distribution<int> len(0, 7), col(0, rows - 1);
    std::normal_distribution<double> g;
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      const int l = len(rng);
      for (int j = 0; j < l; ++j) {
        m.col_idx.push_back(col(rng));
        m.values.emplace_back(g(rng), g(rng));
      }
      m.row_ptr.push_back(static_cast<std::int32_t>(m.col_idx.size()));
    }
    auto x = random_vec(static_cast<std::size_t>(rows), rng);
    std::vector<cplx> y0(static_cast<std::size_t>(rows)), y1(static_cast<std::size_t>(rows));
    ref.csr_matvec(m.view(rows), {0.0, -0.25}, x.data(), y0.data());
    k.csr_matvec(m.view(rows), {0.0, -0.25}, x.data(), y1.data());
    CHECK(max_diff(y0, y1) < 1e-13);
  }
}

TEST_CASE("active table is one of the available variants") {
  const auto& k = kernels();
  CHECK(available(k.isa));
}
