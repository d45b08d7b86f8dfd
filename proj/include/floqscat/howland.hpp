#pragma once

#include <vector>

#include <json.hpp>

#include "floqscat/types.hpp"

namespace floqscat {

/// Truncated Fourier ladder f_n, |n| <= n_max, of a tau-periodic state-valued function.
struct HowlandVector {
  double tau = 1.0;
  int n_max = 0;
  std::vector<Vec> modes;  // modes[n + n_max]
  double tail_mass = 0.0;  // declared mass outside the ladder

  static HowlandVector zero(Index dim, int n_max, double tau);
  double omega() const { return kTwoPi / tau; }
  Index dim() const { return modes.empty() ? 0 : modes.front().size(); }
  Vec& mode(int n) { return modes.at(static_cast<std::size_t>(n + n_max)); }
  const Vec& mode(int n) const { return modes.at(static_cast<std::size_t>(n + n_max)); }
  double norm() const;
};

/// f_n = (1/M) sum_j e^{-i n omega t_j} f(t_j) on t_j = j tau / M. The Nyquist
/// mode of an even grid is stored at n = -M/2; modes beyond the grid are zero.
HowlandVector to_modes(const std::vector<Vec>& samples, double tau, int n_max);
/// f(t_j) = sum_n f_n e^{i n omega t_j} at M uniform points.
std::vector<Vec> to_grid(const HowlandVector& f, int M);
/// sqrt((1/M) sum_j ||f(t_j)||^2)
double grid_norm(const std::vector<Vec>& samples);

/// Multiplication by e^{i k omega t}: g_n = f_{n-k}; modes pushed past n_max are dropped.
HowlandVector mode_shift(const HowlandVector& f, int k);

/// g_n = (h0 + omega n - lambda)^{-1} f_n. SpectrumHit if lambda is within tol of sigma(h0) + omega n.
HowlandVector free_resolvent_modes(const Mat& h0, cplx lambda, const HowlandVector& f, double tol = 1e-12);
/// (h0 + omega n - lambda) g_n, the forward operator of the quasienergy resolvent.
HowlandVector free_forward_apply(const Mat& h0, cplx lambda, const HowlandVector& g);

enum class KernelQuadrature {
  Spectral,  // exact integration of the trigonometric interpolant of the samples
  Trapezoid  // trapezoid rule split at s = t (second order)
};

/// R_0(lambda) f(t_j) = i e^{i t phi} int_0^tau (1_{t-s} + e^{i tau phi}/(1 - e^{i tau phi})) e^{-i s phi} f(s) ds,
/// phi = lambda - h0, at the sample times t_j = j tau / M. ResonantPeriod if 1 - e^{i tau phi} is singular.
std::vector<Vec> free_resolvent_kernel(const Mat& h0, cplx lambda, const std::vector<Vec>& samples, double tau,
                                       KernelQuadrature quad = KernelQuadrature::Spectral, double tol = 1e-12);

/// Relative defect of e^{i omega t} R_0(lambda) e^{-i omega t} f = R_0(lambda + omega) f, through the kernel.
double omega_shift_defect(const Mat& h0, cplx lambda, const std::vector<Vec>& samples, double tau);

struct QuasienergyBands {
  std::vector<std::pair<double, double>> intervals;
  bool has_gaps = false;  // the union leaves gaps inside the window
  nlohmann::json to_json() const;
};

/// Union over n of (sigma(h0) + omega n) intersected with [lo, hi]. sigma(h0)
/// is given as intervals; points are degenerate intervals.
QuasienergyBands free_quasienergy_spectrum(const std::vector<std::pair<double, double>>& sigma, double omega,
                                           double lo, double hi);

}  // namespace floqscat
