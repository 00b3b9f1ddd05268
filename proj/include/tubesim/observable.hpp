#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "tubesim/graph.hpp"

namespace tubesim {

struct ObservableError : std::runtime_error {
  explicit ObservableError(const std::string& what) : std::runtime_error(what) {}
};

// Real-valued function on the metric graph: values at vertices, linear along
// edges. Linear interpolation keeps every instance continuous and bounded.
class Observable {
 public:
  Observable() = default;
  explicit Observable(std::vector<double> vertex_values) : values_(std::move(vertex_values)) {
    if (values_.empty()) throw ObservableError("observable needs at least one vertex value");
  }

  static Observable constant(int vertex_count, double c) {
    if (vertex_count <= 0) throw ObservableError("observable needs at least one vertex value");
    return Observable(std::vector<double>(static_cast<size_t>(vertex_count), c));
  }

  // 1 at the chosen vertex, 0 at all others, linear in between.
  static Observable bump(int vertex_count, int j) {
    if (j < 0 || j >= vertex_count) throw ObservableError("bump vertex out of range");
    std::vector<double> v(static_cast<size_t>(vertex_count), 0.0);
    v[static_cast<size_t>(j)] = 1.0;
    return Observable(std::move(v));
  }

  // Embedding coordinate along one axis; exact for straight edges since the
  // coordinate itself is linear in arc length.
  template <int D>
  static Observable coordinate(const MetricGraph<D>& g, int axis) {
    if (axis < 0 || axis >= D) throw ObservableError("coordinate axis out of range");
    std::vector<double> v(static_cast<size_t>(g.vertex_count()));
    for (int j = 0; j < g.vertex_count(); ++j) v[static_cast<size_t>(j)] = g.position(j)[axis];
    return Observable(std::move(v));
  }

  int vertex_count() const { return static_cast<int>(values_.size()); }
  double at_vertex(int j) const { return values_.at(static_cast<size_t>(j)); }

  template <int D>
  double eval(const MetricGraph<D>& g, const GraphPoint& p) const {
    if (g.vertex_count() != vertex_count())
      throw ObservableError("observable defined on a different graph");
    if (p.at_vertex()) return values_.at(static_cast<size_t>(p.vertex));
    const Edge<D>& e = g.edge(p.edge);
    double w = p.arc / e.len;  // arc measured from the lower-indexed endpoint
    return (1.0 - w) * values_[static_cast<size_t>(e.lo())] +
           w * values_[static_cast<size_t>(e.hi())];
  }

 private:
  std::vector<double> values_;
};

}  // namespace tubesim
