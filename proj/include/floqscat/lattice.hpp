#pragma once

#include <memory>
#include <vector>

#include "floqscat/graph.hpp"
#include "floqscat/sparse.hpp"

namespace floqscat {

/// Dirichlet truncation of a periodic graph to cell offsets in [-L, L]^d.
/// Vertex order is lexicographic in (cell offset, cell-vertex index).
class FiniteLattice {
 public:
  /// Unoriented edge, stored in the direction of its cell edge.
  struct Edge {
    Index x = 0;
    Index y = 0;
    int cell_edge = 0;
  };

  FiniteLattice(std::shared_ptr<const PeriodicGraph> graph, int radius);

  const PeriodicGraph& graph() const { return *graph_; }
  std::shared_ptr<const PeriodicGraph> graph_ptr() const { return graph_; }
  int radius() const { return radius_; }
  int dimension() const { return graph_->dimension(); }
  Index size() const { return n_; }

  /// -1 when the offset lies outside the box.
  Index index(const std::vector<int>& offset, int cell_vertex) const;
  std::vector<int> offset(Index i) const;
  int cell_vertex(Index i) const { return static_cast<int>(i % graph_->nu()); }
  /// Max |offset component|.
  int sup_offset(Index i) const { return sup_[static_cast<std::size_t>(i)]; }
  /// Euclidean norm of the embedded position.
  double abs_x(Index i) const { return absx_(i); }
  const RVec& abs_x() const { return absx_; }
  const RMat& positions() const { return pos_; }

  const std::vector<Edge>& edges() const { return edges_; }
  int degree(Index i) const { return degree_[static_cast<std::size_t>(i)]; }

 private:
  std::shared_ptr<const PeriodicGraph> graph_;
  int radius_;
  Index n_ = 0;
  std::vector<int> offsets_;  // n_ * d
  std::vector<int> sup_;
  RVec absx_;
  RMat pos_;
  std::vector<Edge> edges_;
  std::vector<int> degree_;
};

FiniteLattice truncate(const PeriodicGraph& g, int radius);

/// Sum of |f_x|^2 over vertices whose cell offset has sup-norm > L - shell.
double boundary_mass(const FiniteLattice& lat, const Vec& f, int shell);

/// Fixed sparsity pattern (diagonal plus both orientations of every edge) so
/// time-dependent operators can be refilled without reallocation.
class OperatorPattern {
 public:
  explicit OperatorPattern(const FiniteLattice& lat);

  /// Values of -1/2 e^{i phase_e} at (x,y) and the conjugate at (y,x), diagonal `diag`.
  void fill(const RVec& edge_phase, const RVec& diag, SpMat& out) const;
  /// Same with an arbitrary complex hopping per edge (conjugate placed at (y,x)).
  void fill_hopping(const Vec& hop, const RVec& diag, SpMat& out) const;
  const SpMat& skeleton() const { return skeleton_; }

 private:
  SpMat skeleton_;
  std::vector<int> fwd_, bwd_, diag_;
};

}  // namespace floqscat
