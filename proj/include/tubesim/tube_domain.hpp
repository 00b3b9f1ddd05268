#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubesim/graph.hpp"
#include "tubesim/scaling.hpp"
#include "tubesim/vec.hpp"

namespace tubesim {

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One stopping level on one edge: points whose projection lies on edge k at
// graph distance `level` from O_j.
struct CrossSection {
  int j = -1;
  int k = -1;
  double level = 0.0;
};

// Levels for every edge incident to O_j, each edge exactly once.
struct SectionFamily {
  int j = -1;
  std::vector<std::pair<int, double>> levels;  // (edge id, level)
};

template <int D>
struct LocalCoordinate {
  int j = -1;
  int k = -1;
  double x_tilde = 0.0;
  std::array<double, D - 1> y_tilde{};
};

template <int D>
struct BoundaryData {
  Vec<D> point{};
  Vec<D> normal{};  // unit, pointing into the domain
};

namespace detail {

inline Vec<3> cross(const Vec<3>& a, const Vec<3>& b) {
  return Vec<3>{{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]}};
}

// Deterministic orthonormal transverse frame for a unit direction e.
inline std::array<Vec<2>, 1> transverse_frame(const Vec<2>& e) {
  return {Vec<2>{{-e[1], e[0]}}};
}

inline std::array<Vec<3>, 2> transverse_frame(const Vec<3>& e) {
  int least = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(e[i]) < std::abs(e[least])) least = i;
  Vec<3> axis{};
  axis[least] = 1.0;
  Vec<3> n1 = normalized(axis - dot(axis, e) * e);
  return {n1, cross(e, n1)};
}

}  // namespace detail

// The eps-instantiated narrow tube domain: the union of vertex balls
// B(O_j, r_j) and edge cylinders I_k + B(0, lambda_k * eps). Immutable; all
// queries are pure.
template <int D>
class TubeDomain {
 public:
  TubeDomain(MetricGraph<D> graph, ScalingLaw scaling, double epsilon)
      : graph_(std::move(graph)), scaling_(std::move(scaling)), eps_(epsilon) {
    if (!(eps_ > 0.0)) throw GeometryError("epsilon must be positive");
    if (scaling_.size() != graph_.vertex_count())
      throw GeometryError("scaling law must cover every vertex");
    auto issues = graph_.validate();
    if (!issues.empty()) throw GeometryError("invalid graph: " + issues.front());
    const int nv = graph_.vertex_count();
    const int ne = graph_.edge_count();
    radius_.resize(nv);
    for (int j = 0; j < nv; ++j) {
      radius_[j] = scaling_.radius(j, eps_);
      if (radius_[j] <= 2.0 * eps_)
        throw GeometryError("r_" + std::to_string(j) + " = " +
                            std::to_string(radius_[j]) +
                            " <= 2*eps, collar projection undefined at this scale");
    }
    halfw_.resize(ne);
    for (int k = 0; k < ne; ++k) {
      const Edge<D>& e = graph_.edge(k);
      halfw_[k] = e.lambda * eps_;
      for (int j : {e.a, e.b}) {
        if (halfw_[k] >= radius_[j])
          throw GeometryError("tube " + std::to_string(k) +
                              " half-width >= ball radius at vertex " + std::to_string(j));
        if (2.0 * radius_[j] + 2.0 * halfw_[k] >= e.len)
          throw GeometryError("ball at vertex " + std::to_string(j) +
                              " swallows edge " + std::to_string(k));
      }
      if (radius_[e.a] + radius_[e.b] + 6.0 * eps_ >= e.len)
        throw GeometryError("collar sections of edge " + std::to_string(k) +
                            " do not fit between the vertex balls");
    }
    frames_.resize(ne);
    for (int k = 0; k < ne; ++k) frames_[k] = detail::transverse_frame(graph_.edge(k).dir);
  }

  const MetricGraph<D>& graph() const { return graph_; }
  const ScalingLaw& scaling() const { return scaling_; }
  double epsilon() const { return eps_; }
  double radius(int j) const { return radius_[j]; }
  double half_width(int k) const { return halfw_[k]; }
  double collar_level(int j) const { return radius_[j] + 3.0 * eps_; }
  double min_half_width() const {
    double m = std::numeric_limits<double>::infinity();
    for (double h : halfw_) m = std::min(m, h);
    for (double r : radius_) m = std::min(m, r);  // edgeless domains: ball sets the scale
    return m;
  }

  bool contains(const Vec<D>& z) const {
    int hint = 0;
    return contains_cached(z, hint);
  }

  // Membership with a caller-kept feature hint; features are balls
  // (0..nv-1) then cylinders (nv..nv+ne-1). The hot stepping loop revisits
  // the same feature for long stretches.
  bool contains_cached(const Vec<D>& z, int& hint) const {
    const int nv = graph_.vertex_count();
    const int ne = graph_.edge_count();
    const int total = nv + ne;
    if (hint >= 0 && hint < total && feature_contains(z, hint)) return true;
    for (int f = 0; f < total; ++f) {
      if (f == hint) continue;
      if (feature_contains(z, f)) {
        hint = f;
        return true;
      }
    }
    return false;
  }

  // Nearest boundary point and inward normal. Sphere portions inside a tube
  // and wall portions inside a ball are not boundary and are skipped; the
  // ball/tube corner circles are always candidates (with the sphere normal,
  // which points into the ball cone). Sphere features win ties within 1e-12.
  BoundaryData<D> boundary_reflect_data(const Vec<D>& z) const {
    const int nv = graph_.vertex_count();
    const int ne = graph_.edge_count();
    BoundaryData<D> sphere_best{};
    double sphere_d2 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < nv; ++j) {
      Vec<D> v = z - graph_.position(j);
      double n = norm(v);
      Vec<D> u = n > 0.0 ? (1.0 / n) * v : unit_axis(0);
      Vec<D> b = graph_.position(j) + radius_[j] * u;
      if (!boundary_point_excluded(b, j, -1)) {
        double d2 = dist2(z, b);
        if (d2 < sphere_d2) {
          sphere_d2 = d2;
          sphere_best.point = b;
          sphere_best.normal = -1.0 * u;
        }
      }
    }
    for (int k = 0; k < ne; ++k) {
      const Edge<D>& e = graph_.edge(k);
      for (int j : {e.a, e.b}) {
        // ball/tube corner circle: sphere points at the tube opening rim
        double x_star = std::sqrt(radius_[j] * radius_[j] - halfw_[k] * halfw_[k]);
        Vec<D> dir = graph_.edge_direction(j, k);
        Vec<D> w = z - graph_.position(j);
        Vec<D> perp = w - dot(w, dir) * dir;
        double rho = norm(perp);
        Vec<D> t = rho > 0.0 ? (1.0 / rho) * perp : frame_vector(k, 0);
        Vec<D> b = graph_.position(j) + x_star * dir + halfw_[k] * t;
        double d2 = dist2(z, b);
        if (d2 < sphere_d2) {
          sphere_d2 = d2;
          sphere_best.point = b;
          sphere_best.normal = (1.0 / radius_[j]) * (graph_.position(j) - b);
        }
      }
    }
    BoundaryData<D> wall_best{};
    double wall_d2 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < ne; ++k) {
      const Edge<D>& e = graph_.edge(k);
      const Vec<D>& a = graph_.position(e.a);
      double ax = std::clamp(dot(z - a, e.dir), 0.0, e.len);
      Vec<D> foot = a + ax * e.dir;
      Vec<D> perp = z - foot;
      double rho = norm(perp);
      Vec<D> t = rho > 0.0 ? (1.0 / rho) * perp : frame_vector(k, 0);
      Vec<D> b = foot + halfw_[k] * t;
      if (boundary_point_excluded(b, -1, k)) continue;
      double d2 = dist2(z, b);
      if (d2 < wall_d2) {
        wall_d2 = d2;
        wall_best.point = b;
        wall_best.normal = -1.0 * t;
      }
    }
    double ds = std::sqrt(sphere_d2);
    double dw = std::sqrt(wall_d2);
    return dw < ds - 1e-12 ? wall_best : sphere_best;
  }

  // Pi restricted to the domain (same as the graph's nearest projection).
  GraphPoint nearest_projection(const Vec<D>& z) const { return graph_.nearest_projection(z); }

  // The paper's explicit continuous projection Pi^eps: identity outside the
  // r_j + 2eps collars, affine squeeze inside them, O_j within r_j - 2eps.
  GraphPoint continuous_projection(const Vec<D>& z) const {
    if (!contains(z))
      throw GeometryError("continuous_projection: point outside the domain");
    GraphPoint p = graph_.nearest_projection(z);
    return squeeze(p);
  }

  // The graph-side squeeze of Pi^eps, applied to an already projected point.
  GraphPoint squeeze(const GraphPoint& p) const {
    const int nv = graph_.vertex_count();
    int jbest = -1;
    double depth_best = 0.0;
    double arc_best = 0.0;
    for (int j = 0; j < nv; ++j) {
      double u;
      if (p.at_vertex()) {
        u = graph_.vertex_distance(p.vertex, j);
      } else {
        const Edge<D>& e = graph_.edge(p.edge);
        if (e.a != j && e.b != j) continue;  // collars never span a whole edge
        u = graph_.arc_from(p, j);
      }
      double depth = u - (radius_[j] + 2.0 * eps_);
      if (depth < depth_best) {
        depth_best = depth;
        jbest = j;
        arc_best = u;
      }
    }
    if (jbest < 0) return p;
    double r = radius_[jbest];
    if (arc_best <= r - 2.0 * eps_) return GraphPoint::at(jbest);
    double squeezed =
        (r + 2.0 * eps_) / (4.0 * eps_) * arc_best - (r * r - 4.0 * eps_ * eps_) / (4.0 * eps_);
    if (p.at_vertex() || squeezed <= 0.0) return GraphPoint::at(jbest);
    const Edge<D>& e = graph_.edge(p.edge);
    double arc_lo = e.lo() == jbest ? squeezed : e.len - squeezed;
    return GraphPoint::on_edge(p.edge, arc_lo);
  }

  // (j, k, x_tilde, y_tilde) with j the nearer endpoint of the edge carrying
  // Pi(z); midpoint ties go to the smaller vertex id.
  LocalCoordinate<D> local_coordinates(const Vec<D>& z) const {
    if (!contains(z)) throw GeometryError("local_coordinates: point outside the domain");
    GraphPoint p = graph_.nearest_projection(z);
    if (p.at_vertex()) throw GeometryError("local_coordinates: projection is a vertex");
    const Edge<D>& e = graph_.edge(p.edge);
    // clamped endpoint projections coincide with a vertex: frame ambiguous
    if (p.arc <= 0.0 || p.arc >= e.len)
      throw GeometryError("local_coordinates: projection is a vertex");
    int j = p.arc <= e.len / 2.0 ? e.lo() : e.hi();
    LocalCoordinate<D> lc;
    lc.j = j;
    lc.k = p.edge;
    lc.x_tilde = graph_.arc_from(p, j);
    Vec<D> dir = graph_.edge_direction(j, p.edge);
    Vec<D> w = z - (graph_.position(j) + lc.x_tilde * dir);
    for (int l = 0; l < D - 1; ++l) lc.y_tilde[l] = dot(w, frame_for(j, p.edge, l));
    return lc;
  }

  Vec<D> from_local(const LocalCoordinate<D>& lc) const {
    Vec<D> z = graph_.position(lc.j) + lc.x_tilde * graph_.edge_direction(lc.j, lc.k);
    for (int l = 0; l < D - 1; ++l) z += lc.y_tilde[l] * frame_for(lc.j, lc.k, l);
    return z;
  }

  // Projected abscissa from O_j along an incident edge, for crossing checks.
  std::optional<std::pair<int, double>> section_coordinate(const Vec<D>& z, int j) const {
    GraphPoint p = graph_.nearest_projection(z);
    if (p.at_vertex()) {
      if (p.vertex != j) return std::nullopt;
      return std::make_pair(graph_.incident(j).empty() ? -1 : graph_.incident(j).front(), 0.0);
    }
    const Edge<D>& e = graph_.edge(p.edge);
    if (e.a != j && e.b != j) return std::nullopt;
    return std::make_pair(p.edge, graph_.arc_from(p, j));
  }

  SectionFamily collar_family(int j) const {
    SectionFamily f;
    f.j = j;
    for (int k : graph_.incident(j)) f.levels.emplace_back(k, collar_level(j));
    return f;
  }

  // Eq-corrected simulation levels: stop a collar short of the far ball.
  SectionFamily corrected_family(int j) const {
    SectionFamily f;
    f.j = j;
    for (int k : graph_.incident(j)) {
      int jp = graph_.other_end(k, j);
      f.levels.emplace_back(k, graph_.edge(k).len - collar_level(jp));
    }
    return f;
  }

  SectionFamily family_at(int j, const std::vector<double>& levels_by_incident) const {
    const auto& inc = graph_.incident(j);
    if (levels_by_incident.size() != inc.size())
      throw GeometryError("section family must cover each incident edge exactly once");
    SectionFamily f;
    f.j = j;
    for (size_t i = 0; i < inc.size(); ++i) f.levels.emplace_back(inc[i], levels_by_incident[i]);
    validate_family(f);
    return f;
  }

  void validate_family(const SectionFamily& f) const {
    std::vector<int> seen;
    for (auto [k, level] : f.levels) {
      const Edge<D>& e = graph_.edge(k);
      if (e.a != f.j && e.b != f.j)
        throw GeometryError("section family: edge not incident to its vertex");
      if (!(level > 0.0 && level < e.len))
        throw GeometryError("section family: level outside (0, |I_k|)");
      seen.push_back(k);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw GeometryError("section family: duplicate edge");
    if (seen.size() != graph_.incident(f.j).size())
      throw GeometryError("section family: must cover every incident edge");
  }

  // On-axis point of edge k at graph distance `level` from O_j.
  Vec<D> axis_point(int j, int k, double level) const { return graph_.point_at(j, k, level); }

 private:
  bool feature_contains(const Vec<D>& z, int f) const {
    const int nv = graph_.vertex_count();
    if (f < nv) {
      return dist2(z, graph_.position(f)) <= radius_[f] * radius_[f];
    }
    const Edge<D>& e = graph_.edge(f - nv);
    const Vec<D>& a = graph_.position(e.a);
    Vec<D> w = z - a;
    double ax = dot(w, e.dir);
    if (ax < 0.0 || ax > e.len) return false;
    double h = halfw_[f - nv];
    return norm2(w) - ax * ax <= h * h;
  }

  // True when b lies strictly inside some feature other than the named ones,
  // i.e. b is not actually on the union's boundary there.
  bool boundary_point_excluded(const Vec<D>& b, int own_vertex, int own_edge) const {
    const int nv = graph_.vertex_count();
    const int ne = graph_.edge_count();
    const double tol = 1e-12;
    for (int j = 0; j < nv; ++j) {
      if (j == own_vertex) continue;
      double r = radius_[j];
      if (dist2(b, graph_.position(j)) < r * r * (1.0 - 1e-9) - tol) return true;
    }
    for (int k = 0; k < ne; ++k) {
      if (k == own_edge) continue;
      const Edge<D>& e = graph_.edge(k);
      Vec<D> w = b - graph_.position(e.a);
      double ax = dot(w, e.dir);
      if (ax <= tol || ax >= e.len - tol) continue;
      double h = halfw_[k];
      if (norm2(w) - ax * ax < h * h * (1.0 - 1e-9) - tol) return true;
    }
    return false;
  }

  Vec<D> frame_for(int j, int k, int l) const {
    const Edge<D>& e = graph_.edge(k);
    // frames are stored for the a->b direction; flip the first axis for b->a
    // so the frame stays right-handed with e_{j,k} in 3-D
    Vec<D> n = frames_[k][l];
    if (e.b == j && l == 0) return -1.0 * n;
    return n;
  }

  Vec<D> frame_vector(int k, int l) const { return frames_[k][l]; }

  static Vec<D> unit_axis(int i) {
    Vec<D> v{};
    v[i] = 1.0;
    return v;
  }

  MetricGraph<D> graph_;
  ScalingLaw scaling_;
  double eps_;
  std::vector<double> radius_;
  std::vector<double> halfw_;
  std::vector<std::array<Vec<D>, D - 1>> frames_;
};

}  // namespace tubesim
