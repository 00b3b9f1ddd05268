#pragma once

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubesim/vec.hpp"

namespace tubesim {

// Point on the skeleton graph: either exactly a vertex, or a point on an edge
// at arclength `arc` measured from the lower-indexed endpoint of that edge.
struct GraphPoint {
  int edge = -1;
  double arc = 0.0;
  int vertex = -1;

  bool at_vertex() const { return edge < 0; }

  static GraphPoint on_edge(int k, double arc_from_lo) {
    GraphPoint p;
    p.edge = k;
    p.arc = arc_from_lo;
    return p;
  }
  static GraphPoint at(int j) {
    GraphPoint p;
    p.vertex = j;
    return p;
  }
};

template <int D>
struct Edge {
  int a = 0;           // endpoints as listed in the input
  int b = 0;
  double lambda = 1.0; // tube half-width coefficient
  double len = 0.0;    // |I_k|, consistent with endpoint positions
  Vec<D> dir{};        // unit vector a -> b

  int lo() const { return a < b ? a : b; }
  int hi() const { return a < b ? b : a; }
};

struct EdgeSpec {
  int a = 0;
  int b = 0;
  double lambda = 1.0;
  double explicit_len = -1.0;  // < 0: derive from positions
};

// Finite connected metric graph with straight edges, immutable after build.
// Vertex ids are 0-based indices into the vertex list.
template <int D>
class MetricGraph {
 public:
  static MetricGraph build(std::vector<Vec<D>> positions, const std::vector<EdgeSpec>& specs) {
    MetricGraph g;
    g.pos_ = std::move(positions);
    const int nv = static_cast<int>(g.pos_.size());
    if (nv == 0) throw std::invalid_argument("graph: no vertices");
    g.incident_.resize(g.pos_.size());
    for (const EdgeSpec& s : specs) {
      if (s.a < 0 || s.a >= nv || s.b < 0 || s.b >= nv)
        throw std::invalid_argument("graph: edge endpoint id out of range");
      Edge<D> e;
      e.a = s.a;
      e.b = s.b;
      e.lambda = s.lambda;
      Vec<D> d = g.pos_[s.b] - g.pos_[s.a];
      double euclid = norm(d);
      e.len = s.explicit_len >= 0.0 ? s.explicit_len : euclid;
      if (euclid > 0.0) e.dir = (1.0 / euclid) * d;
      int k = static_cast<int>(g.edges_.size());
      g.edges_.push_back(e);
      g.incident_[s.a].push_back(k);
      g.incident_[s.b].push_back(k);
    }
    for (auto& inc : g.incident_) std::sort(inc.begin(), inc.end());
    g.compute_vertex_distances();
    return g;
  }

  // Report-style invariant check: empty result means valid.
  std::vector<std::string> validate() const {
    std::vector<std::string> issues;
    const int nv = vertex_count();
    for (int i = 0; i < nv; ++i)
      for (int j = i + 1; j < nv; ++j)
        if (dist2(pos_[i], pos_[j]) == 0.0)
          issues.push_back("duplicate vertex positions " + std::to_string(i) + "," + std::to_string(j));
    for (int k = 0; k < edge_count(); ++k) {
      const Edge<D>& e = edges_[k];
      if (e.a == e.b) issues.push_back("edge " + std::to_string(k) + " is a self-loop");
      if (!(e.lambda > 0.0)) issues.push_back("edge " + std::to_string(k) + " has lambda <= 0");
      double euclid = norm(pos_[e.b] - pos_[e.a]);
      if (std::abs(e.len - euclid) > 1e-12 * std::max(1.0, euclid))
        issues.push_back("edge " + std::to_string(k) + " length " + std::to_string(e.len) +
                         " mismatches endpoint distance " + std::to_string(euclid));
      for (int k2 = k + 1; k2 < edge_count(); ++k2) {
        const Edge<D>& f = edges_[k2];
        if ((f.a == e.a && f.b == e.b) || (f.a == e.b && f.b == e.a))
          issues.push_back("duplicate edge " + std::to_string(k) + "," + std::to_string(k2));
      }
    }
    if (!connected()) issues.push_back("graph is disconnected");
    return issues;
  }

  int vertex_count() const { return static_cast<int>(pos_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const Vec<D>& position(int j) const { return pos_[j]; }
  const Edge<D>& edge(int k) const { return edges_[k]; }
  const std::vector<int>& incident(int j) const { return incident_[j]; }

  int other_end(int k, int j) const {
    const Edge<D>& e = edges_[k];
    return e.a == j ? e.b : e.a;
  }

  // Outward unit vector e_{j,k} from O_j along edge k.
  Vec<D> edge_direction(int j, int k) const {
    const Edge<D>& e = edges_[k];
    if (e.a == j) return e.dir;
    if (e.b == j) return -1.0 * e.dir;
    throw std::invalid_argument("edge_direction: edge not incident to vertex");
  }

  // x(s) = O_j + s * e_{j,k}.
  Vec<D> point_at(int j, int k, double s) const {
    if (s < 0.0 || s > edges_[k].len * (1.0 + 1e-12))
      throw std::invalid_argument("point_at: arclength out of range");
    return pos_[j] + s * edge_direction(j, k);
  }

  Vec<D> embed(const GraphPoint& p) const {
    if (p.at_vertex()) return pos_[p.vertex];
    const Edge<D>& e = edges_[p.edge];
    return point_at(e.lo(), p.edge, p.arc);
  }

  // Arclength of p from vertex j, where p lies on edge k incident to j.
  double arc_from(const GraphPoint& p, int j) const {
    const Edge<D>& e = edges_[p.edge];
    return e.lo() == j ? p.arc : e.len - p.arc;
  }

  double vertex_distance(int i, int j) const { return vdist_[static_cast<size_t>(i) * pos_.size() + j]; }

  // d_Gamma. Same-edge pairs take the shorter of the direct segment and any
  // route through the endpoints, which keeps the triangle inequality on
  // graphs whose edges are not geodesics.
  double graph_distance(const GraphPoint& x, const GraphPoint& y) const {
    if (x.at_vertex() && y.at_vertex()) return vertex_distance(x.vertex, y.vertex);
    if (x.at_vertex()) return vertex_to_point(x.vertex, y);
    if (y.at_vertex()) return vertex_to_point(y.vertex, x);
    double best = std::numeric_limits<double>::infinity();
    if (x.edge == y.edge) best = std::abs(x.arc - y.arc);
    const Edge<D>& ex = edges_[x.edge];
    const Edge<D>& ey = edges_[y.edge];
    const double offx[2] = {x.arc, ex.len - x.arc};
    const int vx[2] = {ex.lo(), ex.hi()};
    const double offy[2] = {y.arc, ey.len - y.arc};
    const int vy[2] = {ey.lo(), ey.hi()};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        best = std::min(best, offx[i] + vertex_distance(vx[i], vy[j]) + offy[j]);
    return best;
  }

  // Pi: closest point of the skeleton, ties resolved to the least edge index
  // (strict < comparisons over edges scanned in ascending id order).
  GraphPoint nearest_projection(const Vec<D>& z) const {
    if (edges_.empty()) {
      int jbest = 0;
      double dbest = dist2(z, pos_[0]);
      for (int j = 1; j < vertex_count(); ++j) {
        double d = dist2(z, pos_[j]);
        if (d < dbest) {
          dbest = d;
          jbest = j;
        }
      }
      return GraphPoint::at(jbest);
    }
    int kbest = -1;
    double arcbest = 0.0;
    double dbest = std::numeric_limits<double>::infinity();
    for (int k = 0; k < edge_count(); ++k) {
      const Edge<D>& e = edges_[k];
      const Vec<D>& a = pos_[e.lo()];
      Vec<D> u = e.lo() == e.a ? e.dir : -1.0 * e.dir;
      double s = dot(z - a, u);
      s = std::clamp(s, 0.0, e.len);
      double d = dist2(z - s * u, a);
      if (d < dbest) {
        dbest = d;
        kbest = k;
        arcbest = s;
      }
    }
    return GraphPoint::on_edge(kbest, arcbest);
  }

  bool connected() const {
    std::vector<char> seen(pos_.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int k : incident_[v]) {
        int w = other_end(k, v);
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  }

 private:
  double vertex_to_point(int v, const GraphPoint& p) const {
    const Edge<D>& e = edges_[p.edge];
    double lo_off = p.arc + vertex_distance(v, e.lo());
    double hi_off = (e.len - p.arc) + vertex_distance(v, e.hi());
    return std::min(lo_off, hi_off);
  }

  void compute_vertex_distances() {
    const size_t n = pos_.size();
    vdist_.assign(n * n, std::numeric_limits<double>::infinity());
    for (size_t s = 0; s < n; ++s) {
      double* dist = &vdist_[s * n];
      dist[s] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      heap.push({0.0, static_cast<int>(s)});
      while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[v]) continue;
        for (int k : incident_[v]) {
          int w = other_end(k, v);
          double nd = d + edges_[k].len;
          if (nd < dist[w]) {
            dist[w] = nd;
            heap.push({nd, w});
          }
        }
      }
    }
  }

  std::vector<Vec<D>> pos_;
  std::vector<Edge<D>> edges_;
  std::vector<std::vector<int>> incident_;
  std::vector<double> vdist_;
};

}  // namespace tubesim
