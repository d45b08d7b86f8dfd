#include "floqscat/howland.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "floqscat/error.hpp"
#include "floqscat/parallel.hpp"

namespace floqscat {

HowlandVector HowlandVector::zero(Index dim, int n_max, double tau) {
  if (n_max < 0) fail(ErrorCode::InvalidArgument, "n_max must be >= 0");
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "tau must be positive");
  HowlandVector f;
  f.tau = tau;
  f.n_max = n_max;
  f.modes.assign(static_cast<std::size_t>(2 * n_max + 1), Vec::Zero(dim));
  return f;
}

double HowlandVector::norm() const {
  double s = 0.0;
  for (const auto& m : modes) s += m.squaredNorm();
  return std::sqrt(s);
}

HowlandVector to_modes(const std::vector<Vec>& samples, double tau, int n_max) {
  const int M = static_cast<int>(samples.size());
  if (M < 1) fail(ErrorCode::InvalidArgument, "no samples");
  const Index dim = samples.front().size();
  HowlandVector f = HowlandVector::zero(dim, n_max, tau);
  const int lo = -(M / 2);
  const int hi = (M - 1) / 2;
  double kept = 0.0;
  parallel_for(2 * n_max + 1, [&](std::ptrdiff_t idx) {
    const int n = static_cast<int>(idx) - n_max;
    if (n < lo || n > hi) return;
    Vec acc = Vec::Zero(dim);
    for (int j = 0; j < M; ++j) {
      // reduce n j mod M before forming the angle so large n stay accurate
      const long r = ((static_cast<long>(n) * j) % M + M) % M;
      acc += std::exp(cplx(0.0, -kTwoPi * static_cast<double>(r) / M)) * samples[static_cast<std::size_t>(j)];
    }
    f.modes[static_cast<std::size_t>(idx)] = acc / static_cast<double>(M);
  });
  for (const auto& m : f.modes) kept += m.squaredNorm();
  const double total = std::pow(grid_norm(samples), 2);
  f.tail_mass = std::max(0.0, total - kept);
  return f;
}

std::vector<Vec> to_grid(const HowlandVector& f, int M) {
  if (M < 1) fail(ErrorCode::InvalidArgument, "grid needs at least one point");
  std::vector<Vec> out(static_cast<std::size_t>(M), Vec::Zero(f.dim()));
  parallel_for(M, [&](std::ptrdiff_t j) {
    Vec acc = Vec::Zero(f.dim());
    for (int n = -f.n_max; n <= f.n_max; ++n) {
      const long r = ((static_cast<long>(n) * j) % M + M) % M;
      acc += std::exp(cplx(0.0, kTwoPi * static_cast<double>(r) / M)) * f.mode(n);
    }
    out[static_cast<std::size_t>(j)] = acc;
  });
  return out;
}

double grid_norm(const std::vector<Vec>& samples) {
  double s = 0.0;
  for (const auto& v : samples) s += v.squaredNorm();
  return samples.empty() ? 0.0 : std::sqrt(s / static_cast<double>(samples.size()));
}

HowlandVector mode_shift(const HowlandVector& f, int k) {
  HowlandVector g = HowlandVector::zero(f.dim(), f.n_max, f.tau);
  for (int n = -f.n_max; n <= f.n_max; ++n) {
    const int src = n - k;
    if (src >= -f.n_max && src <= f.n_max) g.mode(n) = f.mode(src);
  }
  return g;
}

namespace {

struct Eig {
  Mat V;
  RVec mu;
  explicit Eig(const Mat& h0) {
    if (h0.rows() != h0.cols()) fail(ErrorCode::DimensionMismatch, "h0 must be square");
    Eigen::SelfAdjointEigenSolver<Mat> es(h0);
    if (es.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "h0 eigendecomposition failed");
    V = es.eigenvectors();
    mu = es.eigenvalues();
  }
};

// (e^z - 1) / z
cplx phi1(cplx z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
  return (std::exp(z) - 1.0) / z;
}

}  // namespace

HowlandVector free_resolvent_modes(const Mat& h0, cplx lambda, const HowlandVector& f, double tol) {
  if (f.dim() != h0.rows()) fail(ErrorCode::DimensionMismatch, "state size does not match h0");
  const Eig e(h0);
  const double omega = f.omega();
  for (int n = -f.n_max; n <= f.n_max; ++n) {
    for (Index k = 0; k < e.mu.size(); ++k) {
      if (std::abs(e.mu(k) + omega * n - lambda) <= tol) {
        fail(ErrorCode::SpectrumHit, "lambda lies on sigma(h0) + omega n for n = " + std::to_string(n));
      }
    }
  }
  HowlandVector g = HowlandVector::zero(f.dim(), f.n_max, f.tau);
  g.tail_mass = f.tail_mass;
  parallel_for(2 * f.n_max + 1, [&](std::ptrdiff_t idx) {
    const int n = static_cast<int>(idx) - f.n_max;
    Vec c = e.V.adjoint() * f.mode(n);
    for (Index k = 0; k < c.size(); ++k) c(k) /= e.mu(k) + omega * n - lambda;
    g.modes[static_cast<std::size_t>(idx)] = e.V * c;
  });
  return g;
}

HowlandVector free_forward_apply(const Mat& h0, cplx lambda, const HowlandVector& g) {
  if (g.dim() != h0.rows()) fail(ErrorCode::DimensionMismatch, "state size does not match h0");
  HowlandVector f = HowlandVector::zero(g.dim(), g.n_max, g.tau);
  for (int n = -g.n_max; n <= g.n_max; ++n) f.mode(n) = h0 * g.mode(n) + (g.omega() * n - lambda) * g.mode(n);
  return f;
}

std::vector<Vec> free_resolvent_kernel(const Mat& h0, cplx lambda, const std::vector<Vec>& samples, double tau,
                                       KernelQuadrature quad, double tol) {
  const int M = static_cast<int>(samples.size());
  if (M < 2) fail(ErrorCode::InvalidArgument, "kernel quadrature needs at least two samples");
  if (samples.front().size() != h0.rows()) fail(ErrorCode::DimensionMismatch, "state size does not match h0");
  const Eig e(h0);
  const Index N = h0.rows();
  const double omega = kTwoPi / tau;
  const double h = tau / M;

  Vec phi(N), c(N);
  for (Index k = 0; k < N; ++k) {
    phi(k) = lambda - e.mu(k);
    const cplx q = std::exp(cplx(0.0, 1.0) * tau * phi(k));
    if (std::abs(1.0 - q) <= tol) {
      fail(ErrorCode::ResonantPeriod, "1 - e^{i tau phi} is singular for eigenvalue " + std::to_string(e.mu(k)));
    }
    c(k) = q / (1.0 - q);
  }
  // samples in the eigenbasis of h0: F(k, j)
  Mat F(N, M);
  for (int j = 0; j < M; ++j) F.col(j) = e.V.adjoint() * samples[static_cast<std::size_t>(j)];

  Mat out(N, M);
  const cplx I(0.0, 1.0);
  if (quad == KernelQuadrature::Spectral) {
    // trigonometric interpolant f(s) = sum_n f_n e^{i n omega s}, n in [-M/2, (M-1)/2]
    const int lo = -(M / 2), hi = (M - 1) / 2;
    Mat Fn(N, hi - lo + 1);
    for (int n = lo; n <= hi; ++n) {
      Vec acc = Vec::Zero(N);
      for (int j = 0; j < M; ++j) {
        const long r = ((static_cast<long>(n) * j) % M + M) % M;
        acc += std::exp(cplx(0.0, -kTwoPi * static_cast<double>(r) / M)) * F.col(j);
      }
      Fn.col(n - lo) = acc / static_cast<double>(M);
    }
    parallel_for(N, [&](std::ptrdiff_t k) {
      // int_0^t e^{-i s phi} e^{i n omega s} ds = t phi1(i (n omega - phi) t)
      cplx full = 0.0;
      for (int n = lo; n <= hi; ++n) full += Fn(k, n - lo) * tau * phi1(I * (n * omega - phi(k)) * tau);
      for (int j = 0; j < M; ++j) {
        const double t = j * h;
        cplx part = 0.0;
        for (int n = lo; n <= hi; ++n) part += Fn(k, n - lo) * t * phi1(I * (n * omega - phi(k)) * t);
        out(k, j) = I * std::exp(I * t * phi(k)) * (part + c(k) * full);
      }
    });
  } else {
    parallel_for(N, [&](std::ptrdiff_t k) {
      std::vector<cplx> g(static_cast<std::size_t>(M + 1));
      for (int j = 0; j <= M; ++j) g[j] = std::exp(-I * (j * h) * phi(k)) * F(k, j % M);
      std::vector<cplx> cum(static_cast<std::size_t>(M + 1), 0.0);
      for (int j = 1; j <= M; ++j) cum[j] = cum[j - 1] + 0.5 * h * (g[j - 1] + g[j]);
      for (int j = 0; j < M; ++j) {
        out(k, j) = I * std::exp(I * (j * h) * phi(k)) * (cum[j] + c(k) * cum[M]);
      }
    });
  }
  std::vector<Vec> res(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) res[static_cast<std::size_t>(j)] = e.V * out.col(j);
  return res;
}

double omega_shift_defect(const Mat& h0, cplx lambda, const std::vector<Vec>& samples, double tau) {
  const int M = static_cast<int>(samples.size());
  const double omega = kTwoPi / tau;
  std::vector<Vec> down(samples.size());
  for (int j = 0; j < M; ++j) {
    down[static_cast<std::size_t>(j)] = std::exp(cplx(0.0, -omega * tau * j / M)) * samples[static_cast<std::size_t>(j)];
  }
  std::vector<Vec> lhs = free_resolvent_kernel(h0, lambda, down, tau);
  for (int j = 0; j < M; ++j) lhs[static_cast<std::size_t>(j)] *= std::exp(cplx(0.0, omega * tau * j / M));
  const std::vector<Vec> rhs = free_resolvent_kernel(h0, lambda + omega, samples, tau);
  double num = 0.0, den = 0.0;
  for (int j = 0; j < M; ++j) {
    num += (lhs[static_cast<std::size_t>(j)] - rhs[static_cast<std::size_t>(j)]).squaredNorm();
    den += rhs[static_cast<std::size_t>(j)].squaredNorm();
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

nlohmann::json QuasienergyBands::to_json() const {
  nlohmann::json iv = nlohmann::json::array();
  for (const auto& [a, b] : intervals) iv.push_back({a, b});
  return {{"intervals", iv}, {"has_gaps", has_gaps}};
}

QuasienergyBands free_quasienergy_spectrum(const std::vector<std::pair<double, double>>& sigma, double omega,
                                           double lo, double hi) {
  if (!(hi > lo)) fail(ErrorCode::InvalidArgument, "empty window");
  if (!(omega > 0.0)) fail(ErrorCode::InvalidArgument, "omega must be positive");
  std::vector<std::pair<double, double>> all;
  for (const auto& [a0, b0] : sigma) {
    const double a = std::min(a0, b0), b = std::max(a0, b0);
    const long n_lo = static_cast<long>(std::floor((lo - b) / omega));
    const long n_hi = static_cast<long>(std::ceil((hi - a) / omega));
    for (long n = n_lo; n <= n_hi; ++n) {
      const double x = std::max(lo, a + omega * n), y = std::min(hi, b + omega * n);
      if (x <= y) all.emplace_back(x, y);
    }
  }
  std::sort(all.begin(), all.end());
  QuasienergyBands out;
  for (const auto& iv : all) {
    if (!out.intervals.empty() && iv.first <= out.intervals.back().second + 1e-12 * std::max(1.0, std::abs(iv.first))) {
      out.intervals.back().second = std::max(out.intervals.back().second, iv.second);
    } else {
      out.intervals.push_back(iv);
    }
  }
  out.has_gaps = !(out.intervals.size() == 1 && out.intervals.front().first <= lo && out.intervals.front().second >= hi);
  return out;
}

}  // namespace floqscat
