#pragma once

#include <random>
#include <utility>
#include <vector>

#include "floqscat/lattice.hpp"

namespace floqscat {

/// One phase per cell edge; the reversed orientation carries the negated value.
struct StaticMagneticPotential {
  std::vector<double> alpha;

  static StaticMagneticPotential zero(const PeriodicGraph& g);
  static StaticMagneticPotential constant(const PeriodicGraph& g, double phi);
  static StaticMagneticPotential random(const PeriodicGraph& g, std::mt19937_64& rng, double amplitude = kPi);
  double oriented(const OrientedEdge& e) const;
  /// Phase of every truncated edge in its stored orientation.
  RVec on(const FiniteLattice& lat) const;
};

/// Periodic values per cell vertex plus optional localized additions
/// (single-site defects) on a concrete truncation.
struct StaticElectricPotential {
  std::vector<double> periodic;
  struct Defect {
    std::vector<int> offset;
    int cell_vertex = 0;
    double value = 0.0;
  };
  std::vector<Defect> defects;

  static StaticElectricPotential zero(const PeriodicGraph& g);
  static StaticElectricPotential constant(const PeriodicGraph& g, double c);
  RVec on(const FiniteLattice& lat) const;
  /// Upper bound on the sup norm.
  double sup() const;
};

/// Matrix of (Delta_alpha f)_x = 1/2 sum_{e=(x,y)} (f_x - e^{i alpha(e)} f_y) on the truncation.
SpMat magnetic_laplacian(const FiniteLattice& lat, const StaticMagneticPotential& alpha);
/// Same with one phase per truncated edge (stored orientation).
SpMat magnetic_laplacian(const FiniteLattice& lat, const RVec& edge_phase);
SpMat schrodinger(const FiniteLattice& lat, const StaticMagneticPotential& alpha, const StaticElectricPotential& p);

/// nu x nu Floquet-Bloch matrix at quasimomentum k; an edge with offset n
/// carries the factor e^{i<n,k>}.
Mat fiber_operator(const PeriodicGraph& g, const StaticMagneticPotential& alpha, const std::vector<double>& p,
                   const std::vector<double>& k);

struct BandStructure {
  int dimension = 1;
  int n_k = 0;
  RMat k_points;  // rows: grid points, cols: k_1..k_d
  RMat sheets;    // rows: grid points, cols: lambda_1..lambda_nu (sorted)
  std::vector<std::pair<double, double>> intervals;
  std::vector<bool> flat;
  std::vector<double> flat_value;
  /// Union of the band intervals, merged.
  std::vector<std::pair<double, double>> spectrum() const;
};

BandStructure band_structure(const PeriodicGraph& g, const StaticMagneticPotential& alpha, const std::vector<double>& p,
                             int n_k);

/// Flags sheet j when its range over the grid is <= tol; writes flat/flat_value into b.
std::vector<bool> detect_flat_bands(BandStructure& b, double tol = 1e-9);

/// Merge overlapping or touching intervals.
std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> iv, double slack = 0.0);

/// Eigenvalues (ascending) of a Hermitian operator.
RVec hermitian_eigenvalues(const Mat& h);

}  // namespace floqscat
