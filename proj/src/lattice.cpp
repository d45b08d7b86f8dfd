#include "floqscat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "floqscat/error.hpp"

namespace floqscat {

FiniteLattice::FiniteLattice(std::shared_ptr<const PeriodicGraph> graph, int radius)
    : graph_(std::move(graph)), radius_(radius) {
  if (radius_ < 1) fail(ErrorCode::InvalidArgument, "truncation radius must be >= 1");
  const int d = graph_->dimension();
  const int nu = graph_->nu();
  const Index side = 2 * radius_ + 1;
  Index cells = 1;
  for (int i = 0; i < d; ++i) cells *= side;
  n_ = cells * nu;
  offsets_.resize(static_cast<std::size_t>(n_ * d));
  sup_.resize(static_cast<std::size_t>(n_));
  absx_.resize(n_);
  pos_.resize(n_, d);
  for (Index c = 0; c < cells; ++c) {
    std::vector<int> off(static_cast<std::size_t>(d));
    Index rem = c;
    for (int j = d - 1; j >= 0; --j) {
      off[static_cast<std::size_t>(j)] = static_cast<int>(rem % side) - radius_;
      rem /= side;
    }
    int sup = 0;
    for (int o : off) sup = std::max(sup, std::abs(o));
    for (int v = 0; v < nu; ++v) {
      const Index i = c * nu + v;
      for (int j = 0; j < d; ++j) offsets_[static_cast<std::size_t>(i * d + j)] = off[static_cast<std::size_t>(j)];
      sup_[static_cast<std::size_t>(i)] = sup;
      for (int a = 0; a < d; ++a) {
        double p = graph_->vertices()[static_cast<std::size_t>(v)].position[static_cast<std::size_t>(a)];
        for (int j = 0; j < d; ++j) p += off[static_cast<std::size_t>(j)] * graph_->periods()[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
        pos_(i, a) = p;
      }
      absx_(i) = pos_.row(i).norm();
    }
  }
  degree_.assign(static_cast<std::size_t>(n_), 0);
  const auto& cell_edges = graph_->edges();
  for (Index c = 0; c < cells; ++c) {
    const std::vector<int> off = offset(c * nu);
    for (std::size_t e = 0; e < cell_edges.size(); ++e) {
      std::vector<int> target = off;
      for (int j = 0; j < d; ++j) target[static_cast<std::size_t>(j)] += cell_edges[e].offset[static_cast<std::size_t>(j)];
      const Index y = index(target, cell_edges[e].to);
      if (y < 0) continue;
      const Index x = c * nu + cell_edges[e].from;
      edges_.push_back({x, y, static_cast<int>(e)});
      ++degree_[static_cast<std::size_t>(x)];
      ++degree_[static_cast<std::size_t>(y)];
    }
  }
}

Index FiniteLattice::index(const std::vector<int>& offset, int cell_vertex) const {
  const int d = graph_->dimension();
  if (static_cast<int>(offset.size()) != d) fail(ErrorCode::DimensionMismatch, "offset length != dimension");
  const Index side = 2 * radius_ + 1;
  Index c = 0;
  for (int j = 0; j < d; ++j) {
    const int o = offset[static_cast<std::size_t>(j)];
    if (o < -radius_ || o > radius_) return -1;
    c = c * side + (o + radius_);
  }
  return c * graph_->nu() + cell_vertex;
}

std::vector<int> FiniteLattice::offset(Index i) const {
  const int d = graph_->dimension();
  auto first = offsets_.begin() + static_cast<std::ptrdiff_t>(i * d);
  return {first, first + d};
}

FiniteLattice truncate(const PeriodicGraph& g, int radius) {
  return FiniteLattice(std::make_shared<const PeriodicGraph>(g), radius);
}

double boundary_mass(const FiniteLattice& lat, const Vec& f, int shell) {
  if (shell < 0 || shell > lat.radius()) fail(ErrorCode::InvalidArgument, "boundary shell must lie in [0, L]");
  if (f.size() != lat.size()) fail(ErrorCode::DimensionMismatch, "state length != lattice size");
  double m = 0.0;
  for (Index i = 0; i < lat.size(); ++i) {
    if (lat.sup_offset(i) > lat.radius() - shell) m += std::norm(f(i));
  }
  return m;
}

OperatorPattern::OperatorPattern(const FiniteLattice& lat) {
  const Index n = lat.size();
  std::vector<Eigen::Triplet<cplx, int>> trip;
  trip.reserve(static_cast<std::size_t>(n + 2 * static_cast<Index>(lat.edges().size())));
  for (Index i = 0; i < n; ++i) trip.emplace_back(static_cast<int>(i), static_cast<int>(i), cplx(1.0, 0.0));
  for (const auto& e : lat.edges()) {
    trip.emplace_back(static_cast<int>(e.x), static_cast<int>(e.y), cplx(1.0, 0.0));
    trip.emplace_back(static_cast<int>(e.y), static_cast<int>(e.x), cplx(1.0, 0.0));
  }
  skeleton_.resize(n, n);
  skeleton_.setFromTriplets(trip.begin(), trip.end(), [](const cplx& a, const cplx&) { return a; });
  skeleton_.makeCompressed();
  auto slot = [&](Index r, Index c) {
    const int* first = skeleton_.innerIndexPtr() + skeleton_.outerIndexPtr()[r];
    const int* last = skeleton_.innerIndexPtr() + skeleton_.outerIndexPtr()[r + 1];
    const int* it = std::lower_bound(first, last, static_cast<int>(c));
    return static_cast<int>(it - skeleton_.innerIndexPtr());
  };
  diag_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) diag_[static_cast<std::size_t>(i)] = slot(i, i);
  for (const auto& e : lat.edges()) {
    fwd_.push_back(slot(e.x, e.y));
    bwd_.push_back(slot(e.y, e.x));
  }
}

void OperatorPattern::fill(const RVec& edge_phase, const RVec& diag, SpMat& out) const {
  if (out.nonZeros() != skeleton_.nonZeros() || out.rows() != skeleton_.rows()) out = skeleton_;
  cplx* val = out.valuePtr();
  const Index ne = static_cast<Index>(fwd_.size());
  std::fill(val, val + out.nonZeros(), cplx(0.0, 0.0));
  for (Index i = 0; i < diag.size(); ++i) val[diag_[static_cast<std::size_t>(i)]] += diag(i);
  for (Index e = 0; e < ne; ++e) {
    const cplx h = -0.5 * std::exp(cplx(0.0, edge_phase(e)));
    val[fwd_[static_cast<std::size_t>(e)]] += h;
    val[bwd_[static_cast<std::size_t>(e)]] += std::conj(h);
  }
}

void OperatorPattern::fill_hopping(const Vec& hop, const RVec& diag, SpMat& out) const {
  if (out.nonZeros() != skeleton_.nonZeros() || out.rows() != skeleton_.rows()) out = skeleton_;
  cplx* val = out.valuePtr();
  std::fill(val, val + out.nonZeros(), cplx(0.0, 0.0));
  for (Index i = 0; i < diag.size(); ++i) val[diag_[static_cast<std::size_t>(i)]] += diag(i);
  for (Index e = 0; e < hop.size(); ++e) {
    val[fwd_[static_cast<std::size_t>(e)]] += hop(e);
    val[bwd_[static_cast<std::size_t>(e)]] += std::conj(hop(e));
  }
}

}  // namespace floqscat
