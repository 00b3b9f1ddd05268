#pragma once

// Canonical small graphs and randomized instances shared across test files.

#include <cmath>
#include <utility>
#include <vector>

#include "tubesim/graph.hpp"
#include "tubesim/limits.hpp"
#include "tubesim/rng.hpp"
#include "tubesim/scaling.hpp"

namespace testutil {

using tubesim::EdgeSpec;
using tubesim::MetricGraph;
using tubesim::Vec;

// Three leaves at 120 degrees around a center vertex (id 0).
inline MetricGraph<2> star3(double l0 = 1.5, double l1 = 1.5, double l2 = 3.0) {
  auto leaf = [](double len, double deg) {
    double a = deg * M_PI / 180.0;
    return Vec<2>{{len * std::cos(a), len * std::sin(a)}};
  };
  std::vector<Vec<2>> pos{{{0.0, 0.0}}, leaf(l0, 90.0), leaf(l1, 210.0), leaf(l2, 330.0)};
  std::vector<EdgeSpec> es{{0, 1, 1.0, -1.0}, {0, 2, 2.0, -1.0}, {0, 3, 1.0, -1.0}};
  return MetricGraph<2>::build(pos, es);
}

// Two-vertex single-edge graph.
inline MetricGraph<2> dumbbell(double len = 1.0, double lambda = 1.0) {
  std::vector<Vec<2>> pos{{{0.0, 0.0}}, {{len, 0.0}}};
  std::vector<EdgeSpec> es{{0, 1, lambda, -1.0}};
  return MetricGraph<2>::build(pos, es);
}

// Bent three-vertex path 0 - 1 - 2 with given edge lengths.
inline MetricGraph<2> path3(double l01 = 1.0, double l12 = 2.0) {
  double a = 30.0 * M_PI / 180.0;
  std::vector<Vec<2>> pos{{{0.0, 0.0}},
                          {{l01, 0.0}},
                          {{l01 + l12 * std::cos(a), l12 * std::sin(a)}}};
  std::vector<EdgeSpec> es{{0, 1, 1.0, -1.0}, {1, 2, 1.0, -1.0}};
  return MetricGraph<2>::build(pos, es);
}

// Connected random graph: a spanning tree plus a few shortcuts, vertices on
// a jittered grid so no two coincide. Used for chain-level property tests.
inline MetricGraph<2> random_graph(tubesim::RngStream& rng, int max_vertices = 8) {
  int nv = 3 + static_cast<int>(rng.uniform() * (max_vertices - 2));
  if (nv > max_vertices) nv = max_vertices;
  std::vector<Vec<2>> pos;
  pos.reserve(static_cast<size_t>(nv));
  for (int j = 0; j < nv; ++j) {
    double jx, jy;
    rng.uniform2(jx, jy);
    pos.push_back(Vec<2>{{(j % 3) * 10.0 + 4.0 * jx, (j / 3) * 10.0 + 4.0 * jy}});
  }
  std::vector<EdgeSpec> es;
  auto have = [&](int a, int b) {
    for (const auto& e : es)
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return true;
    return false;
  };
  for (int j = 1; j < nv; ++j) {
    int parent = static_cast<int>(rng.uniform() * j);
    es.push_back({parent, j, 0.5 + 1.5 * rng.uniform(), -1.0});
  }
  int extras = static_cast<int>(rng.uniform() * 3.0);
  for (int t = 0; t < extras; ++t) {
    int a = static_cast<int>(rng.uniform() * nv);
    int b = static_cast<int>(rng.uniform() * nv);
    if (a == b || a >= nv || b >= nv || have(a, b)) continue;
    es.push_back({a, b, 0.5 + 1.5 * rng.uniform(), -1.0});
  }
  return MetricGraph<2>::build(pos, es);
}

// Distinct random exponents in (0.08, 0.42) for d = 2, one per vertex.
inline tubesim::ScalingLaw random_scaling(tubesim::RngStream& rng, int nv) {
  std::vector<double> c, beta;
  for (int j = 0; j < nv; ++j) {
    c.push_back(0.5 + 1.5 * rng.uniform());
    beta.push_back(0.08 + 0.34 * rng.uniform());
  }
  return tubesim::ScalingLaw(std::move(c), std::move(beta), 2);
}

// Run the discrete chain until absorption; the Monte Carlo oracle for
// absorption_distribution.
inline int chain_walk(const tubesim::AbsorbingChain& chain, int start, tubesim::RngStream& rng) {
  int state = start;
  for (int hop = 0; hop < 100000; ++hop) {
    if (chain.absorbing[static_cast<size_t>(state)]) return state;
    double u = rng.uniform();
    const auto& row = chain.p[static_cast<size_t>(state)];
    for (size_t m = 0; m < row.size(); ++m) {
      u -= row[m];
      if (u <= 0.0) {
        state = static_cast<int>(m);
        break;
      }
    }
  }
  return state;
}

}  // namespace testutil
