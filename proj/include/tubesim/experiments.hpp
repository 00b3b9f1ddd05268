#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tubesim/config.hpp"
#include "tubesim/ensemble.hpp"
#include "tubesim/limits.hpp"
#include "tubesim/observable.hpp"
#include "tubesim/parallel.hpp"
#include "tubesim/predictor.hpp"
#include "tubesim/sde.hpp"
#include "tubesim/tube_domain.hpp"

namespace tubesim {

// Start-point sampling draws from its own stream so the walk, which reuses
// (seed, trajectory_index) from counter zero, never sees the same blocks.
inline constexpr uint64_t kStartStreamBit = 1ull << 63;

// The on-axis domain point over a graph point (fiber representative).
template <int D>
Vec<D> realize_start(const TubeDomain<D>& dom, const GraphPoint& x) {
  if (x.at_vertex()) return dom.graph().position(x.vertex);
  const Edge<D>& e = dom.graph().edge(x.edge);
  return dom.axis_point(e.lo(), x.edge, x.arc);
}

template <int D>
GraphPoint graph_point_of(const MetricGraph<D>& g, const GraphPointSpec& spec) {
  if (spec.is_vertex) return GraphPoint::at(spec.vertex);
  if (spec.edge < 0 || spec.edge >= g.edge_count())
    throw ConfigError("x.edge: id out of range");
  if (!(spec.arc >= 0.0 && spec.arc <= g.edge(spec.edge).len))
    throw ConfigError("x.arc: outside the edge length");
  return GraphPoint::on_edge(spec.edge, spec.arc);
}

template <int D>
Observable make_observable(const MetricGraph<D>& g, const ObservableSpec& spec) {
  if (spec.type == "bump") return Observable::bump(g.vertex_count(), spec.vertex);
  if (spec.type == "constant") return Observable::constant(g.vertex_count(), spec.value);
  return Observable::coordinate(g, spec.axis);
}

inline std::string graph_point_label(const GraphPoint& x) {
  char buf[48];
  if (x.at_vertex())
    std::snprintf(buf, sizeof(buf), "v%d", x.vertex);
  else
    std::snprintf(buf, sizeof(buf), "e%d:%.6g", x.edge, x.arc);
  return buf;
}

// ---------------------------------------------------------------------------
// Exit statistics

template <int D>
ExitEnsemble<D> run_exit_ensemble(const TubeDomain<D>& dom, int j, const SectionFamily& family,
                                  int trajectories, const SimConfig& base, int workers,
                                  const StartSpec& start) {
  base.check();
  dom.validate_family(family);
  if (start.mode == "axis") {
    bool incident = false;
    for (int k : dom.graph().incident(j)) incident |= k == start.edge;
    if (!incident) throw SimulationError("start.edge: not incident to the source vertex");
  }
  std::vector<ExitRecord<D>> records(static_cast<size_t>(trajectories));
  const std::vector<SectionFamily> families{family};
  parallel_for_indexed(trajectories, workers, [&](long long i) {
    SimConfig cfg = base;
    cfg.trajectory_index = base.trajectory_index + static_cast<uint64_t>(i);
    RngStream start_rng(cfg.seed, cfg.trajectory_index | kStartStreamBit);
    int edge_choice = start.mode == "axis" ? start.edge : -1;
    Vec<D> z = collar_start(dom, j, edge_choice, start.randomize_transverse, start_rng);
    records[static_cast<size_t>(i)] = run_until_sections(dom, z, families, cfg);
  });
  ExitEnsemble<D> ens;
  ens.eps = dom.epsilon();
  ens.j = j;
  ens.levels = family.levels;
  std::sort(ens.levels.begin(), ens.levels.end());
  ens.delta = 0.0;
  ens.records = std::move(records);
  return ens;
}

struct ExitEdgeRow {
  int edge = -1;
  double frequency = 0.0;
  stats::Interval wilson;
  double limit_p = 0.0;
};

template <int D>
struct ExitStatsResult {
  double eps = 0.0;
  ExitEnsemble<D> ensemble;
  std::vector<ExitEdgeRow> edges;
  stats::Summary mean;
  double limit_scale = 0.0;
  double ratio = 0.0;
  std::optional<TestReport> ks;
  std::optional<TestReport> independence;
};

template <int D>
ExitStatsResult<D> run_exit_stats(const MetricGraph<D>& g, const ScalingLaw& scaling, double eps,
                                  int j, const std::optional<std::vector<std::pair<int, double>>>& levels,
                                  int trajectories, const SimConfig& base, int workers,
                                  const StartSpec& start) {
  TubeDomain<D> dom(g, scaling, eps);
  SectionFamily family = levels ? SectionFamily{j, *levels} : dom.corrected_family(j);
  std::sort(family.levels.begin(), family.levels.end());

  ExitStatsResult<D> out;
  out.eps = eps;
  out.ensemble = run_exit_ensemble(dom, j, family, trajectories, base, workers, start);

  // Sections sit at the corrected levels, but the limit columns use the raw
  // edge lengths; explicit user levels override both.
  auto freq = exit_place_distribution(out.ensemble);
  auto limit = levels ? exit_edge_probability(g, j, *levels) : exit_edge_probability(g, j);
  for (size_t i = 0; i < freq.size(); ++i) {
    ExitEdgeRow row;
    row.edge = freq[i].edge;
    row.frequency = freq[i].frequency;
    row.wilson = freq[i].wilson;
    for (const auto& [k, p] : limit)
      if (k == row.edge) row.limit_p = p;
    out.edges.push_back(row);
  }
  out.mean = mean_exit_time(out.ensemble);
  out.limit_scale = levels ? mean_exit_scale(g, scaling, j, eps, *levels)
                           : mean_exit_scale(g, scaling, j, eps);
  out.ratio = out.mean.mean / out.limit_scale;
  if (out.ensemble.uncensored_count() >= 500) {
    out.ks = ks_exponential(out.ensemble, out.limit_scale);
    out.independence = independence_test(out.ensemble);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Intermediate scale (Monte Carlo vs absorption distribution)

struct IntermediateResult {
  double eps = 0.0;
  int index = 0;
  double t = 0.0;
  GraphPoint x;
  std::string observable;
  McEstimate mc;
  double limit = 0.0;
  double discrepancy_se = 0.0;  // (estimate - limit) / SE
  bool pass = false;
};

inline void finish_prediction(IntermediateResult& r) {
  double diff = r.mc.estimate - r.limit;
  if (r.mc.se > 0.0)
    r.discrepancy_se = diff / r.mc.se;
  else
    r.discrepancy_se = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  // absolute floor so zero-variance observables are not failed on rounding noise
  r.pass = r.mc.valid && std::abs(diff) <= 3.0 * r.mc.se + 1e-12;
}

template <int D>
IntermediateResult run_intermediate(const MetricGraph<D>& g, const ScalingLaw& scaling, double eps,
                                    int index, const GraphPoint& x, const Observable& F,
                                    const std::string& observable_label, int trajectories,
                                    const SimConfig& base, int workers,
                                    std::optional<double> t_value, bool via_pde = false) {
  TubeDomain<D> dom(g, scaling, eps);
  auto ladder = timescale_ladder(scaling, D);
  if (index < 1 || index > ladder.count() - 1)
    throw ModelError("intermediate index must lie in [1, |V'|-1]");
  IntermediateResult out;
  out.eps = eps;
  out.index = index;
  out.x = x;
  out.observable = observable_label;
  out.t = t_value ? *t_value
                  : std::sqrt(ladder.timescale(index, eps) * ladder.timescale(index + 1, eps));
  Vec<D> z = realize_start(dom, x);
  out.mc = via_pde ? pde_solution(dom, z, out.t, F, trajectories, base, workers)
                   : mc_observable(dom, z, out.t, F, trajectories, base, workers);
  out.limit = predict_intermediate(g, scaling, index, x, F);
  finish_prediction(out);
  return out;
}

// ---------------------------------------------------------------------------
// First critical scale (checkpointed runs against the vertex CTMC)

struct CriticalPointResult {
  double s = 0.0;
  double horizon = 0.0;
  int n = 0;
  double p_collar = 0.0;  // empirical P(Pi^eps(Z(s T1)) within the j1 collar)
  double se = 0.0;
  double limit = 0.0;  // P(Y(s) = j1) = exp(-kappa s)
  double diff = 0.0;
  bool pass = false;       // |diff| <= max(3 SE, 0.05)
  double p_far = 0.0;      // P(farther than delta and not yet escaped)
  bool loc_pass = false;   // p_far below the localization threshold
  int escaped = 0;         // trajectories escaped by this horizon
};

struct FirstCriticalResult {
  double eps = 0.0;
  int j1 = -1;
  double kappa = 0.0;
  double t1 = 0.0;
  double delta = 0.0;
  double threshold = 0.05;
  int trajectories = 0;
  int censored = 0;
  std::vector<CriticalPointResult> points;
};

template <int D>
FirstCriticalResult run_first_critical(const MetricGraph<D>& g, const ScalingLaw& scaling,
                                       double eps, std::vector<double> s_values, int trajectories,
                                       const SimConfig& base, int workers, double delta = 0.0,
                                       double threshold = 0.05) {
  base.check();
  TubeDomain<D> dom(g, scaling, eps);
  auto ladder = timescale_ladder(scaling, D);
  FirstCriticalResult out;
  out.eps = eps;
  out.trajectories = trajectories;
  out.threshold = threshold;
  out.t1 = ladder.timescale(1, eps);

  if (ladder.groups.front().vertices.size() != 1)
    throw ModelError("first critical scale: the smallest-radius class must contain exactly one vertex");
  out.j1 = ladder.groups.front().vertices.front();
  SectionFamily targets = dom.corrected_family(out.j1);
  std::sort(targets.levels.begin(), targets.levels.end());
  // The critical-scale law is compared at the corrected lengths, the same
  // levels the escape detection stops at.
  out.kappa = ctmc_build(g, scaling, targets.levels).rate;

  double min_level = targets.levels.front().second;
  for (const auto& [k, lvl] : targets.levels) min_level = std::min(min_level, lvl);
  out.delta = delta > 0.0 ? delta
                          : std::max(2.0 * dom.collar_level(out.j1), 0.1 * min_level);
  if (!(out.delta < min_level))
    throw SimulationError("localization delta must stay below the exit levels");

  std::sort(s_values.begin(), s_values.end());
  s_values.erase(std::unique(s_values.begin(), s_values.end()), s_values.end());
  std::vector<double> horizons;
  for (double s : s_values) horizons.push_back(s * out.t1);

  const Vec<D> start = dom.graph().position(out.j1);
  std::vector<CriticalScaleRecord<D>> records(static_cast<size_t>(trajectories));
  parallel_for_indexed(trajectories, workers, [&](long long i) {
    SimConfig cfg = base;
    cfg.trajectory_index = base.trajectory_index + static_cast<uint64_t>(i);
    records[static_cast<size_t>(i)] = critical_scale_run(dom, start, targets, horizons, cfg);
  });

  const double collar = dom.collar_level(out.j1);
  for (size_t si = 0; si < s_values.size(); ++si) {
    CriticalPointResult pt;
    pt.s = s_values[si];
    pt.horizon = horizons[si];
    long long in_collar = 0, far = 0, escaped = 0, n = 0;
    for (const auto& rec : records) {
      if (rec.filled <= si) continue;
      ++n;
      const auto& cs = rec.at[si];
      in_collar += cs.graph_dist <= collar ? 1 : 0;
      far += (!cs.escaped && cs.graph_dist > out.delta) ? 1 : 0;
      escaped += cs.escaped ? 1 : 0;
    }
    if (n == 0) throw SimulationError("first critical scale: all trajectories censored");
    pt.n = static_cast<int>(n);
    pt.p_collar = static_cast<double>(in_collar) / static_cast<double>(n);
    pt.se = std::sqrt(std::max(pt.p_collar * (1.0 - pt.p_collar), 1e-12) / static_cast<double>(n));
    pt.limit = std::exp(-out.kappa * pt.s);
    pt.diff = pt.p_collar - pt.limit;
    pt.pass = std::abs(pt.diff) <= std::max(3.0 * pt.se, 0.05);
    pt.p_far = static_cast<double>(far) / static_cast<double>(n);
    pt.loc_pass = pt.p_far < threshold;
    pt.escaped = static_cast<int>(escaped);
    out.points.push_back(pt);
  }
  for (const auto& rec : records) out.censored += (rec.censored || rec.aborted) ? 1 : 0;
  return out;
}

}  // namespace tubesim
