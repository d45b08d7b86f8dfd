#include "floqscat/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "floqscat/error.hpp"

namespace floqscat {

PeriodicGraph::PeriodicGraph(int dimension, std::vector<std::vector<double>> periods,
                             std::vector<CellVertex> vertices, std::vector<CellEdge> edges)
    : dim_(dimension), periods_(std::move(periods)), vertices_(std::move(vertices)), edges_(std::move(edges)) {
  if (dim_ < 1) fail(ErrorCode::MalformedSpec, "dimension must be >= 1");
  if (vertices_.empty()) fail(ErrorCode::MalformedSpec, "graph needs at least one cell vertex");
  if (periods_.empty()) {
    periods_.assign(static_cast<std::size_t>(dim_), std::vector<double>(static_cast<std::size_t>(dim_), 0.0));
    for (int i = 0; i < dim_; ++i) periods_[i][i] = 1.0;
  }
  if (static_cast<int>(periods_.size()) != dim_) fail(ErrorCode::DimensionMismatch, "expected d period vectors");
  for (const auto& p : periods_) {
    if (static_cast<int>(p.size()) != dim_) fail(ErrorCode::DimensionMismatch, "period vector length != dimension");
  }
  std::set<std::string> labels;
  for (auto& v : vertices_) {
    if (!labels.insert(v.label).second) fail(ErrorCode::MalformedSpec, "duplicate vertex label '" + v.label + "'");
    if (v.position.empty()) v.position.assign(static_cast<std::size_t>(dim_), 0.0);
    if (static_cast<int>(v.position.size()) != dim_) {
      fail(ErrorCode::DimensionMismatch, "position of '" + v.label + "' has wrong length");
    }
  }
  degree_.assign(vertices_.size(), 0);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (e.from < 0 || e.from >= nu() || e.to < 0 || e.to >= nu()) {
      fail(ErrorCode::MalformedSpec, "edge " + std::to_string(i) + " references a vertex out of range");
    }
    if (static_cast<int>(e.offset.size()) != dim_) {
      fail(ErrorCode::DimensionMismatch, "edge " + std::to_string(i) + " offset has wrong length");
    }
    const bool zero = std::all_of(e.offset.begin(), e.offset.end(), [](int o) { return o == 0; });
    if (zero && e.from == e.to) fail(ErrorCode::MalformedSpec, "edge " + std::to_string(i) + " is a loop");
    std::vector<int> neg(e.offset.size());
    std::transform(e.offset.begin(), e.offset.end(), neg.begin(), [](int o) { return -o; });
    oriented_.push_back({static_cast<int>(i), false, e.from, e.to, e.offset});
    oriented_.push_back({static_cast<int>(i), true, e.to, e.from, neg});
    ++degree_[static_cast<std::size_t>(e.from)];
    ++degree_[static_cast<std::size_t>(e.to)];
  }
  for (int v = 0; v < nu(); ++v) {
    if (degree_[static_cast<std::size_t>(v)] == 0) {
      fail(ErrorCode::IsolatedVertex, "vertex '" + vertices_[static_cast<std::size_t>(v)].label + "' has degree 0");
    }
  }
  kappa_plus_ = *std::max_element(degree_.begin(), degree_.end());
}

PeriodicGraph PeriodicGraph::lattice_zd(int d) {
  std::vector<CellEdge> edges;
  for (int i = 0; i < d; ++i) {
    std::vector<int> off(static_cast<std::size_t>(d), 0);
    off[static_cast<std::size_t>(i)] = 1;
    edges.push_back({0, 0, off});
  }
  return PeriodicGraph(d, {}, {{"o", {}}}, edges);
}

PeriodicGraph PeriodicGraph::hexagonal() {
  const double s3 = std::sqrt(3.0);
  std::vector<std::vector<double>> periods{{1.5, s3 / 2}, {1.5, -s3 / 2}};
  std::vector<CellVertex> verts{{"A", {0.0, 0.0}}, {"B", {1.0, 0.0}}};
  std::vector<CellEdge> edges{{0, 1, {0, 0}}, {0, 1, {-1, 0}}, {0, 1, {0, -1}}};
  return PeriodicGraph(2, periods, verts, edges);
}

PeriodicGraph PeriodicGraph::diamond_chain() {
  std::vector<CellVertex> verts{{"a", {0.0}}, {"b", {0.5}}, {"c", {0.5}}};
  std::vector<CellEdge> edges{{0, 1, {0}}, {0, 2, {0}}, {1, 0, {1}}, {2, 0, {1}}};
  return PeriodicGraph(1, {}, verts, edges);
}

int PeriodicGraph::vertex_index(const std::string& label) const {
  for (int i = 0; i < nu(); ++i) {
    if (vertices_[static_cast<std::size_t>(i)].label == label) return i;
  }
  fail(ErrorCode::MalformedSpec, "unknown vertex label '" + label + "'");
}

PeriodicGraph PeriodicGraph::from_json(const nlohmann::json& doc) {
  using nlohmann::json;
  try {
    if (!doc.is_object()) fail(ErrorCode::MalformedSpec, "graph spec must be an object");
    static const std::set<std::string> allowed{"version", "name", "dimension", "periods", "vertices", "edges"};
    for (const auto& [key, _] : doc.items()) {
      if (!allowed.count(key)) fail(ErrorCode::MalformedSpec, "unknown key '" + key + "' in graph spec");
    }
    if (!doc.contains("dimension") || !doc.contains("vertices") || !doc.contains("edges")) {
      fail(ErrorCode::MalformedSpec, "graph spec needs dimension, vertices, edges");
    }
    const int d = doc.at("dimension").get<int>();
    std::vector<std::vector<double>> periods;
    if (doc.contains("periods")) periods = doc.at("periods").get<std::vector<std::vector<double>>>();
    std::vector<CellVertex> verts;
    for (const auto& v : doc.at("vertices")) {
      if (v.is_string()) {
        verts.push_back({v.get<std::string>(), {}});
      } else if (v.is_object()) {
        for (const auto& [key, _] : v.items()) {
          if (key != "label" && key != "position") fail(ErrorCode::MalformedSpec, "unknown vertex key '" + key + "'");
        }
        CellVertex cv{v.at("label").get<std::string>(), {}};
        if (v.contains("position")) cv.position = v.at("position").get<std::vector<double>>();
        verts.push_back(cv);
      } else {
        fail(ErrorCode::MalformedSpec, "vertex entries are labels or {label, position}");
      }
    }
    auto find = [&](const std::string& label) {
      for (std::size_t i = 0; i < verts.size(); ++i) {
        if (verts[i].label == label) return static_cast<int>(i);
      }
      fail(ErrorCode::MalformedSpec, "edge references unknown vertex '" + label + "'");
    };
    std::vector<CellEdge> edges;
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 3) fail(ErrorCode::MalformedSpec, "edge must be [from, to, offset]");
      edges.push_back({find(e[0].get<std::string>()), find(e[1].get<std::string>()), e[2].get<std::vector<int>>()});
    }
    return PeriodicGraph(d, periods, verts, edges);
  } catch (const json::exception& ex) {
    fail(ErrorCode::MalformedSpec, std::string("graph spec: ") + ex.what());
  }
}

PeriodicGraph PeriodicGraph::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MalformedSpec, "cannot open graph spec '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::MalformedSpec, "graph spec '" + path + "': " + ex.what());
  }
  return from_json(doc);
}

nlohmann::json PeriodicGraph::to_json() const {
  nlohmann::json verts = nlohmann::json::array();
  for (const auto& v : vertices_) verts.push_back({{"label", v.label}, {"position", v.position}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : edges_) {
    edges.push_back({vertices_[static_cast<std::size_t>(e.from)].label, vertices_[static_cast<std::size_t>(e.to)].label,
                     e.offset});
  }
  return {{"dimension", dim_}, {"periods", periods_}, {"vertices", verts}, {"edges", edges}};
}

}  // namespace floqscat
