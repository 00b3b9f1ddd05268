#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tubesim/graph.hpp"
#include "tubesim/rng.hpp"
#include "tubesim/scaling.hpp"

namespace tubesim {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Volume of the unit d-ball, d = 1, 2, 3.
inline double unit_ball_volume(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return M_PI;
    case 3: return 4.0 * M_PI / 3.0;
    default: throw ModelError("unit_ball_volume: d must be 1, 2, or 3");
  }
}

namespace detail {

// Levels L_{j,k} for the edges incident to j; defaults to full edge lengths.
template <int D>
std::vector<std::pair<int, double>> incident_levels(const MetricGraph<D>& g, int j) {
  std::vector<std::pair<int, double>> out;
  for (int k : g.incident(j)) out.emplace_back(k, g.edge(k).len);
  return out;
}

template <int D>
void check_levels(const MetricGraph<D>& g, int j,
                  const std::vector<std::pair<int, double>>& levels) {
  if (levels.empty()) throw ModelError("no incident edges at vertex");
  for (auto [k, level] : levels) {
    const auto& e = g.edge(k);
    if (e.a != j && e.b != j) throw ModelError("level given for a non-incident edge");
    if (!(level > 0.0)) throw ModelError("levels must be positive");
  }
}

}  // namespace detail

// p_k = (lambda_k^{d-1}/L_k) / sum_l (lambda_l^{d-1}/L_l) over edges incident
// to j, at the given per-edge levels.
template <int D>
std::vector<std::pair<int, double>> exit_edge_probability(
    const MetricGraph<D>& g, int j, const std::vector<std::pair<int, double>>& levels) {
  detail::check_levels(g, j, levels);
  std::vector<std::pair<int, double>> out;
  double total = 0.0;
  for (auto [k, level] : levels) {
    double w = std::pow(g.edge(k).lambda, D - 1) / level;
    out.emplace_back(k, w);
    total += w;
  }
  for (auto& [k, w] : out) w /= total;
  return out;
}

template <int D>
std::vector<std::pair<int, double>> exit_edge_probability(const MetricGraph<D>& g, int j) {
  return exit_edge_probability(g, j, detail::incident_levels(g, j));
}

// alpha(eps) = r_j^d V_d / (sum_k lambda_k^{d-1} eps^{d-1} V_{d-1}): the
// ball-to-tube volume ratio that sets the exit-time scale.
template <int D>
double alpha(const MetricGraph<D>& g, const ScalingLaw& scaling, int j, double eps) {
  if (!(eps > 0.0)) throw ModelError("alpha: eps must be positive");
  double lam = 0.0;
  for (int k : g.incident(j)) lam += std::pow(g.edge(k).lambda, D - 1);
  if (lam == 0.0) throw ModelError("alpha: vertex has no incident edges");
  double r = scaling.radius(j, eps);
  return std::pow(r, D) * unit_ball_volume(D) /
         (lam * std::pow(eps, D - 1) * unit_ball_volume(D - 1));
}

// Limiting mean exit time alpha * (sum lambda^{d-1}) / (sum lambda^{d-1}/L);
// also the conditional mean given any exit edge.
template <int D>
double mean_exit_scale(const MetricGraph<D>& g, const ScalingLaw& scaling, int j, double eps,
                       const std::vector<std::pair<int, double>>& levels) {
  detail::check_levels(g, j, levels);
  double num = 0.0, den = 0.0;
  for (auto [k, level] : levels) {
    double lam = std::pow(g.edge(k).lambda, D - 1);
    num += lam;
    den += lam / level;
  }
  return alpha(g, scaling, j, eps) * num / den;
}

// Same scale with L_k = |I_k|: the levels-free form used by the limit columns.
template <int D>
double mean_exit_scale(const MetricGraph<D>& g, const ScalingLaw& scaling, int j, double eps) {
  return mean_exit_scale(g, scaling, j, eps, detail::incident_levels(g, j));
}

// CTMC escape rate kappa_{j}(L) = V_{d-1} sum_k (lambda_k^{d-1}/L_k) / V_d,
// in units of the vertex timescale r_j^d / eps^{d-1}.
template <int D>
double kappa(const MetricGraph<D>& g, int j, const std::vector<std::pair<int, double>>& levels) {
  detail::check_levels(g, j, levels);
  double s = 0.0;
  for (auto [k, level] : levels) s += std::pow(g.edge(k).lambda, D - 1) / level;
  return unit_ball_volume(D - 1) * s / unit_ball_volume(D);
}

struct TimescaleGroup {
  double beta = 0.0;           // shared radius exponent
  double c = 1.0;              // representative constant (lowest member id)
  std::vector<int> vertices;   // members, ascending
};

// Distinct radius order classes sorted fastest first (largest beta = smallest
// radius), with T^i(eps) = r_(i)^d / eps^{d-1}.
struct TimescaleLadder {
  int dim = 2;
  std::vector<TimescaleGroup> groups;

  int count() const { return static_cast<int>(groups.size()); }

  // i is 1-based, matching the ladder superscript.
  double timescale(int i, double eps) const {
    if (i < 1 || i > count()) throw ModelError("timescale: group index out of range");
    const auto& gr = groups[static_cast<size_t>(i - 1)];
    double r = gr.c * std::pow(eps, gr.beta);
    return std::pow(r, dim) / std::pow(eps, dim - 1);
  }

  int group_of(int vertex) const {
    for (size_t i = 0; i < groups.size(); ++i)
      for (int v : groups[i].vertices)
        if (v == vertex) return static_cast<int>(i) + 1;
    throw ModelError("group_of: unknown vertex");
  }
};

inline TimescaleLadder timescale_ladder(const ScalingLaw& scaling, int d) {
  TimescaleLadder ladder;
  ladder.dim = d;
  std::map<double, TimescaleGroup, std::greater<double>> by_beta;
  for (int j = 0; j < scaling.size(); ++j) {
    auto& gr = by_beta[scaling.beta(j)];
    if (gr.vertices.empty()) {
      gr.beta = scaling.beta(j);
      gr.c = scaling.c(j);
    }
    gr.vertices.push_back(j);
  }
  for (auto& [beta, gr] : by_beta) ladder.groups.push_back(std::move(gr));
  return ladder;
}

// Discrete chain at ladder level i: vertices with strictly slower timescales
// (smaller beta) absorb; the rest jump over full edge lengths.
struct AbsorbingChain {
  int index = 0;
  std::vector<bool> absorbing;
  std::vector<std::vector<double>> p;  // row-stochastic over vertices
};

template <int D>
AbsorbingChain intermediate_chain(const MetricGraph<D>& g, const ScalingLaw& scaling, int i) {
  TimescaleLadder ladder = timescale_ladder(scaling, D);
  if (i < 1 || i >= ladder.count())
    throw ModelError("intermediate_chain: need 1 <= i <= |V'| - 1 so an absorbing class exists");
  int nv = g.vertex_count();
  AbsorbingChain chain;
  chain.index = i;
  chain.absorbing.assign(static_cast<size_t>(nv), false);
  chain.p.assign(static_cast<size_t>(nv), std::vector<double>(static_cast<size_t>(nv), 0.0));
  double beta_i = ladder.groups[static_cast<size_t>(i - 1)].beta;
  for (int j = 0; j < nv; ++j) {
    auto ju = static_cast<size_t>(j);
    if (scaling.beta(j) < beta_i) {
      chain.absorbing[ju] = true;
      chain.p[ju][ju] = 1.0;
    } else {
      for (auto [k, prob] : exit_edge_probability(g, j))
        chain.p[ju][static_cast<size_t>(g.other_end(k, j))] += prob;
    }
  }
  return chain;
}

namespace detail {

// Solve A X = B in place by Gaussian elimination with partial pivoting.
inline std::vector<std::vector<double>> solve_linear(std::vector<std::vector<double>> a,
                                                     std::vector<std::vector<double>> b) {
  size_t n = a.size();
  size_t m = b.empty() ? 0 : b[0].size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t row = col + 1; row < n; ++row)
      if (std::fabs(a[row][col]) > std::fabs(a[piv][col])) piv = row;
    if (std::fabs(a[piv][col]) < 1e-14)
      throw ModelError("singular linear system: some transient state cannot reach absorption");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (size_t row = col + 1; row < n; ++row) {
      double f = a[row][col] / a[col][col];
      if (f == 0.0) continue;
      for (size_t c2 = col; c2 < n; ++c2) a[row][c2] -= f * a[col][c2];
      for (size_t c2 = 0; c2 < m; ++c2) b[row][c2] -= f * b[col][c2];
    }
  }
  for (size_t col = n; col-- > 0;) {
    for (size_t c2 = 0; c2 < m; ++c2) {
      double s = b[col][c2];
      for (size_t k = col + 1; k < n; ++k) s -= a[col][k] * b[k][c2];
      b[col][c2] = s / a[col][col];
    }
  }
  return b;
}

}  // namespace detail

struct AbsorptionDistribution {
  std::vector<bool> absorbing;
  std::vector<std::vector<double>> mu;  // rows over vertices, supported on absorbing states
};

// mu = (I - Q)^{-1} R in canonical transient/absorbing form.
inline AbsorptionDistribution absorption_distribution(const AbsorbingChain& chain) {
  size_t nv = chain.p.size();
  std::vector<size_t> transient;
  std::vector<size_t> absorbing;
  for (size_t j = 0; j < nv; ++j)
    (chain.absorbing[j] ? absorbing : transient).push_back(j);
  if (absorbing.empty()) throw ModelError("absorption_distribution: no absorbing state");

  AbsorptionDistribution out;
  out.absorbing = chain.absorbing;
  out.mu.assign(nv, std::vector<double>(nv, 0.0));
  for (size_t j : absorbing) out.mu[j][j] = 1.0;
  if (transient.empty()) return out;

  size_t nt = transient.size();
  std::vector<std::vector<double>> imq(nt, std::vector<double>(nt, 0.0));
  std::vector<std::vector<double>> r(nt, std::vector<double>(absorbing.size(), 0.0));
  for (size_t ti = 0; ti < nt; ++ti) {
    for (size_t tj = 0; tj < nt; ++tj)
      imq[ti][tj] = (ti == tj ? 1.0 : 0.0) - chain.p[transient[ti]][transient[tj]];
    for (size_t aj = 0; aj < absorbing.size(); ++aj)
      r[ti][aj] = chain.p[transient[ti]][absorbing[aj]];
  }
  auto u = detail::solve_linear(std::move(imq), std::move(r));
  for (size_t ti = 0; ti < nt; ++ti)
    for (size_t aj = 0; aj < absorbing.size(); ++aj)
      out.mu[transient[ti]][absorbing[aj]] = u[ti][aj];
  return out;
}

// One-dimensional hitting weight p(x, O_j) = d(x, O_{j'}) / |I_k| for x on
// the edge joining j and j'; point mass at vertices.
template <int D>
double hitting_weight(const MetricGraph<D>& g, const GraphPoint& x, int j) {
  if (x.at_vertex()) return x.vertex == j ? 1.0 : 0.0;
  const auto& e = g.edge(x.edge);
  if (e.a != j && e.b != j) return 0.0;
  return g.arc_from(x, g.other_end(x.edge, j)) / e.len;
}

// mu^i(x, .) = sum_j p(x, O_j) mu^i(O_j, .).
template <int D>
std::vector<double> mu_extended(const AbsorptionDistribution& dist, const MetricGraph<D>& g,
                                const GraphPoint& x) {
  if (x.at_vertex()) return dist.mu[static_cast<size_t>(x.vertex)];
  const auto& e = g.edge(x.edge);
  double wa = hitting_weight(g, x, e.a);
  double wb = hitting_weight(g, x, e.b);
  std::vector<double> row(dist.mu.size(), 0.0);
  for (size_t m = 0; m < row.size(); ++m)
    row[m] = wa * dist.mu[static_cast<size_t>(e.a)][m] + wb * dist.mu[static_cast<size_t>(e.b)][m];
  return row;
}

// Limit process at the first critical scale: the unique fastest vertex j1
// empties at rate kappa, every other vertex is frozen.
struct VertexCTMC {
  int j1 = -1;
  double rate = 0.0;
  std::vector<double> rates;                // per vertex: rate at j1, else 0
  std::vector<std::vector<double>> jump;    // row-stochastic jump rows
};

template <int D>
VertexCTMC ctmc_build(const MetricGraph<D>& g, const ScalingLaw& scaling,
                      const std::vector<std::pair<int, double>>& levels_j1) {
  TimescaleLadder ladder = timescale_ladder(scaling, D);
  const auto& fastest = ladder.groups.front().vertices;
  if (fastest.size() != 1)
    throw ModelError("ctmc_build: the smallest-radius class must contain exactly one vertex");
  VertexCTMC y;
  y.j1 = fastest.front();
  y.rate = kappa(g, y.j1, levels_j1);
  int nv = g.vertex_count();
  y.rates.assign(static_cast<size_t>(nv), 0.0);
  y.rates[static_cast<size_t>(y.j1)] = y.rate;
  y.jump.assign(static_cast<size_t>(nv), std::vector<double>(static_cast<size_t>(nv), 0.0));
  for (int j = 0; j < nv; ++j) {
    auto levels = (j == y.j1) ? levels_j1 : detail::incident_levels(g, j);
    for (auto [k, prob] : exit_edge_probability(g, j, levels))
      y.jump[static_cast<size_t>(j)][static_cast<size_t>(g.other_end(k, j))] += prob;
  }
  return y;
}

// Law of Y(s) started at `start`, via uniformization: a Poisson mixture of
// powers of P = I + Q/rate, truncated once the Poisson tail drops below 1e-13.
inline std::vector<double> ctmc_law_at(const VertexCTMC& y, int start, double s) {
  size_t nv = y.rates.size();
  if (start < 0 || static_cast<size_t>(start) >= nv) throw ModelError("ctmc_law_at: bad start");
  if (s < 0.0) throw ModelError("ctmc_law_at: s must be nonnegative");
  std::vector<double> row(nv, 0.0), result(nv, 0.0);
  row[static_cast<size_t>(start)] = 1.0;
  double lam = y.rate * s;
  if (lam == 0.0) return row;

  std::vector<std::vector<double>> p(nv, std::vector<double>(nv, 0.0));
  for (size_t j = 0; j < nv; ++j) {
    double q = y.rates[j] / y.rate;
    for (size_t m = 0; m < nv; ++m) p[j][m] = q * y.jump[j][m];
    p[j][j] += 1.0 - q;
  }

  double w = std::exp(-lam);
  double cum = 0.0;
  std::vector<double> next(nv, 0.0);
  for (int n = 0; n < 200000; ++n) {
    for (size_t m = 0; m < nv; ++m) result[m] += w * row[m];
    cum += w;
    if (cum >= 1.0 - 1e-13) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (size_t j = 0; j < nv; ++j) {
      if (row[j] == 0.0) continue;
      for (size_t m = 0; m < nv; ++m) next[m] += row[j] * p[j][m];
    }
    row.swap(next);
    w *= lam / (n + 1);
  }
  return result;
}

// Exact CTMC path sample: exponential holding times, categorical jumps.
inline int ctmc_sample(const VertexCTMC& y, int start, double s, RngStream& rng) {
  size_t nv = y.rates.size();
  if (start < 0 || static_cast<size_t>(start) >= nv) throw ModelError("ctmc_sample: bad start");
  if (s < 0.0) throw ModelError("ctmc_sample: s must be nonnegative");
  int state = start;
  double t = 0.0;
  while (true) {
    double rate = y.rates[static_cast<size_t>(state)];
    if (rate == 0.0) return state;
    t += rng.exponential(rate);
    if (t > s) return state;
    double u = rng.uniform();
    const auto& row = y.jump[static_cast<size_t>(state)];
    int nxt = state;
    for (size_t m = 0; m < nv; ++m) {
      u -= row[m];
      if (u <= 0.0) {
        nxt = static_cast<int>(m);
        break;
      }
    }
    state = nxt;
  }
}

}  // namespace tubesim
