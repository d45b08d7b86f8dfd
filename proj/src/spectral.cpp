#include "floqscat/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "floqscat/error.hpp"
#include "floqscat/parallel.hpp"

namespace floqscat {

StaticMagneticPotential StaticMagneticPotential::zero(const PeriodicGraph& g) {
  return {std::vector<double>(g.edges().size(), 0.0)};
}

StaticMagneticPotential StaticMagneticPotential::constant(const PeriodicGraph& g, double phi) {
  return {std::vector<double>(g.edges().size(), phi)};
}

StaticMagneticPotential StaticMagneticPotential::random(const PeriodicGraph& g, std::mt19937_64& rng,
                                                        double amplitude) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  StaticMagneticPotential a;
  for (std::size_t i = 0; i < g.edges().size(); ++i) a.alpha.push_back(u(rng));
  return a;
}

double StaticMagneticPotential::oriented(const OrientedEdge& e) const {
  const double a = alpha.at(static_cast<std::size_t>(e.cell_edge));
  return e.reversed ? -a : a;
}

RVec StaticMagneticPotential::on(const FiniteLattice& lat) const {
  if (alpha.size() != lat.graph().edges().size()) {
    fail(ErrorCode::PotentialShapeMismatch, "magnetic potential has " + std::to_string(alpha.size()) +
                                                " values, graph has " + std::to_string(lat.graph().edges().size()) +
                                                " cell edges");
  }
  RVec ph(static_cast<Index>(lat.edges().size()));
  for (std::size_t e = 0; e < lat.edges().size(); ++e) {
    ph(static_cast<Index>(e)) = alpha[static_cast<std::size_t>(lat.edges()[e].cell_edge)];
  }
  return ph;
}

StaticElectricPotential StaticElectricPotential::zero(const PeriodicGraph& g) {
  return {std::vector<double>(static_cast<std::size_t>(g.nu()), 0.0), {}};
}

StaticElectricPotential StaticElectricPotential::constant(const PeriodicGraph& g, double c) {
  return {std::vector<double>(static_cast<std::size_t>(g.nu()), c), {}};
}

RVec StaticElectricPotential::on(const FiniteLattice& lat) const {
  if (static_cast<int>(periodic.size()) != lat.graph().nu()) {
    fail(ErrorCode::PotentialShapeMismatch, "electric potential needs one value per cell vertex");
  }
  RVec p(lat.size());
  for (Index i = 0; i < lat.size(); ++i) p(i) = periodic[static_cast<std::size_t>(lat.cell_vertex(i))];
  for (const auto& d : defects) {
    const Index i = lat.index(d.offset, d.cell_vertex);
    if (i >= 0) p(i) += d.value;
  }
  return p;
}

double StaticElectricPotential::sup() const {
  double s = 0.0;
  for (double v : periodic) s = std::max(s, std::abs(v));
  double extra = 0.0;
  for (const auto& d : defects) extra += std::abs(d.value);
  return s + extra;
}

SpMat magnetic_laplacian(const FiniteLattice& lat, const RVec& edge_phase) {
  if (edge_phase.size() != static_cast<Index>(lat.edges().size())) {
    fail(ErrorCode::PotentialShapeMismatch, "edge phase vector length != number of truncated edges");
  }
  RVec diag(lat.size());
  for (Index i = 0; i < lat.size(); ++i) diag(i) = 0.5 * lat.degree(i);
  SpMat h;
  OperatorPattern(lat).fill(edge_phase, diag, h);
  return h;
}

SpMat magnetic_laplacian(const FiniteLattice& lat, const StaticMagneticPotential& alpha) {
  return magnetic_laplacian(lat, alpha.on(lat));
}

SpMat schrodinger(const FiniteLattice& lat, const StaticMagneticPotential& alpha, const StaticElectricPotential& p) {
  SpMat h = magnetic_laplacian(lat, alpha);
  const RVec pv = p.on(lat);
  for (Index i = 0; i < lat.size(); ++i) h.coeffRef(static_cast<int>(i), static_cast<int>(i)) += pv(i);
  return h;
}

Mat fiber_operator(const PeriodicGraph& g, const StaticMagneticPotential& alpha, const std::vector<double>& p,
                   const std::vector<double>& k) {
  if (static_cast<int>(k.size()) != g.dimension()) fail(ErrorCode::DimensionMismatch, "k has wrong dimension");
  if (static_cast<int>(p.size()) != g.nu()) fail(ErrorCode::PotentialShapeMismatch, "p needs nu values");
  if (alpha.alpha.size() != g.edges().size()) fail(ErrorCode::PotentialShapeMismatch, "alpha needs one value per cell edge");
  const int nu = g.nu();
  Mat h = Mat::Zero(nu, nu);
  for (int v = 0; v < nu; ++v) h(v, v) = 0.5 * g.degree(v) + p[static_cast<std::size_t>(v)];
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    const auto& ce = g.edges()[e];
    double nk = 0.0;
    for (int j = 0; j < g.dimension(); ++j) nk += ce.offset[static_cast<std::size_t>(j)] * k[static_cast<std::size_t>(j)];
    const cplx hop = -0.5 * std::exp(cplx(0.0, alpha.alpha[e] + nk));
    h(ce.from, ce.to) += hop;
    h(ce.to, ce.from) += std::conj(hop);
  }
  return h;
}

RVec hermitian_eigenvalues(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorCode::EigensolverFailure, "Hermitian eigensolver did not converge");
  return es.eigenvalues();
}

BandStructure band_structure(const PeriodicGraph& g, const StaticMagneticPotential& alpha, const std::vector<double>& p,
                             int n_k) {
  if (n_k < 2) fail(ErrorCode::InvalidArgument, "n_k must be >= 2");
  const int d = g.dimension();
  const int nu = g.nu();
  Index total = 1;
  for (int j = 0; j < d; ++j) total *= n_k;
  BandStructure b;
  b.dimension = d;
  b.n_k = n_k;
  b.k_points.resize(total, d);
  b.sheets.resize(total, nu);
  for (Index i = 0; i < total; ++i) {
    Index rem = i;
    for (int j = d - 1; j >= 0; --j) {
      b.k_points(i, j) = kTwoPi * static_cast<double>(rem % n_k) / n_k;
      rem /= n_k;
    }
  }
  parallel_for(total, [&](std::ptrdiff_t i) {
    std::vector<double> k(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) k[static_cast<std::size_t>(j)] = b.k_points(i, j);
    Eigen::SelfAdjointEigenSolver<Mat> es(fiber_operator(g, alpha, p, k), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      std::string where;
      for (double kj : k) where += std::to_string(kj) + " ";
      fail(ErrorCode::EigensolverFailure, "fiber eigensolver failed at k = " + where);
    }
    b.sheets.row(i) = es.eigenvalues().transpose();
  });
  for (int j = 0; j < nu; ++j) b.intervals.emplace_back(b.sheets.col(j).minCoeff(), b.sheets.col(j).maxCoeff());
  detect_flat_bands(b);
  return b;
}

std::vector<bool> detect_flat_bands(BandStructure& b, double tol) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "flat-band tolerance must be positive");
  b.flat.assign(b.intervals.size(), false);
  b.flat_value.assign(b.intervals.size(), 0.0);
  for (std::size_t j = 0; j < b.intervals.size(); ++j) {
    if (b.intervals[j].second - b.intervals[j].first <= tol) {
      b.flat[j] = true;
      b.flat_value[j] = b.sheets.col(static_cast<Index>(j)).mean();
    }
  }
  return b.flat;
}

std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> iv, double slack) {
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& seg : iv) {
    if (!out.empty() && seg.first <= out.back().second + slack) {
      out.back().second = std::max(out.back().second, seg.second);
    } else {
      out.push_back(seg);
    }
  }
  return out;
}

std::vector<std::pair<double, double>> BandStructure::spectrum() const { return merge_intervals(intervals); }

}  // namespace floqscat
