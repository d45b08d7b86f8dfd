#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "floqscat/types.hpp"

namespace floqscat {

struct CellVertex {
  std::string label;
  std::vector<double> position;  // metadata; only used for |x|
};

/// Oriented edge from cell vertex `from` in cell 0 to cell vertex `to` in cell `offset`.
struct CellEdge {
  int from = 0;
  int to = 0;
  std::vector<int> offset;
};

/// Entry of the symmetrized edge list: each cell edge appears once forward and
/// once reversed (negated offset).
struct OrientedEdge {
  int cell_edge = 0;
  bool reversed = false;
  int from = 0;
  int to = 0;
  std::vector<int> offset;
};

class PeriodicGraph {
 public:
  PeriodicGraph(int dimension, std::vector<std::vector<double>> periods, std::vector<CellVertex> vertices,
                std::vector<CellEdge> edges);

  static PeriodicGraph lattice_zd(int d);
  static PeriodicGraph hexagonal();
  /// Chain a-b, a-c inside the cell, b and c both linked to the next a. Has a flat band.
  static PeriodicGraph diamond_chain();
  /// Parse a graph spec document; unknown keys are rejected.
  static PeriodicGraph from_json(const nlohmann::json& doc);
  static PeriodicGraph from_file(const std::string& path);
  nlohmann::json to_json() const;

  int dimension() const { return dim_; }
  int nu() const { return static_cast<int>(vertices_.size()); }
  const std::vector<std::vector<double>>& periods() const { return periods_; }
  const std::vector<CellVertex>& vertices() const { return vertices_; }
  const std::vector<CellEdge>& edges() const { return edges_; }
  const std::vector<OrientedEdge>& oriented_edges() const { return oriented_; }
  int degree(int v) const { return degree_[static_cast<std::size_t>(v)]; }
  int kappa_plus() const { return kappa_plus_; }
  int vertex_index(const std::string& label) const;

 private:
  int dim_;
  std::vector<std::vector<double>> periods_;
  std::vector<CellVertex> vertices_;
  std::vector<CellEdge> edges_;
  std::vector<OrientedEdge> oriented_;
  std::vector<int> degree_;
  int kappa_plus_ = 0;
};

}  // namespace floqscat
