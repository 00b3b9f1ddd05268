#pragma once

#include <cmath>
#include <cstdio>
#include <vector>

#include "tubesim/ensemble.hpp"
#include "tubesim/limits.hpp"
#include "tubesim/observable.hpp"
#include "tubesim/parallel.hpp"
#include "tubesim/sde.hpp"
#include "tubesim/stats.hpp"
#include "tubesim/tube_domain.hpp"

namespace tubesim {

struct McEstimate {
  double estimate = 0.0;
  double se = 0.0;
  int n = 0;         // trajectories that reached the horizon
  int censored = 0;  // hit max_steps before the horizon
  int aborted = 0;
  bool valid = false;  // censoring rate must stay at or below 1%

  double censoring_rate() const {
    int total = n + censored + aborted;
    return total == 0 ? 0.0 : static_cast<double>(censored + aborted) / total;
  }
};

// Monte Carlo E_z[F(Pi^eps(Z(t)))] over trajectories (seed, base_index + i).
template <int D>
McEstimate mc_observable(const TubeDomain<D>& dom, const Vec<D>& z, double t, const Observable& F,
                         int trajectories, const SimConfig& cfg, int workers = 1) {
  if (t < 0.0) throw SimulationError("mc_observable: time must be nonnegative");
  if (trajectories < 100) throw SimulationError("mc_observable: need at least 100 trajectories");
  cfg.check();
  std::vector<double> values(static_cast<size_t>(trajectories));
  std::vector<char> ok(static_cast<size_t>(trajectories), 0);
  std::vector<char> hard_fail(static_cast<size_t>(trajectories), 0);
  parallel_for_indexed(trajectories, workers, [&](long long i) {
    SimConfig local = cfg;
    local.trajectory_index = cfg.trajectory_index + static_cast<uint64_t>(i);
    Vec<D> pos = z;
    PositionResult res = position_at(dom, pos, t, local);
    if (res.censored || res.aborted) {
      hard_fail[static_cast<size_t>(i)] = res.aborted ? 2 : 1;
      return;
    }
    values[static_cast<size_t>(i)] = F.eval(dom.graph(), dom.continuous_projection(pos));
    ok[static_cast<size_t>(i)] = 1;
  });
  McEstimate out;
  std::vector<double> kept;
  kept.reserve(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (ok[i]) {
      kept.push_back(values[i]);
    } else {
      (hard_fail[i] == 2 ? out.aborted : out.censored) += 1;
    }
  }
  out.n = static_cast<int>(kept.size());
  if (out.n > 0) {
    auto s = stats::summarize(kept);
    out.estimate = s.mean;
    out.se = s.se;
  }
  out.valid = out.n > 0 && out.censoring_rate() <= 0.01;
  return out;
}

// Feynman-Kac representation of the Neumann heat semigroup: the solution with
// initial data F composed with Pi^eps, evaluated at (t, z).
template <int D>
McEstimate pde_solution(const TubeDomain<D>& dom, const Vec<D>& z, double t, const Observable& F,
                        int trajectories, const SimConfig& cfg, int workers = 1) {
  return mc_observable(dom, z, t, F, trajectories, cfg, workers);
}

// Deterministic intermediate-scale limit: sum_j' F(O_j') mu^i(x, O_j').
template <int D>
double predict_intermediate(const MetricGraph<D>& g, const ScalingLaw& scaling, int i,
                            const GraphPoint& x, const Observable& F) {
  auto dist = absorption_distribution(intermediate_chain(g, scaling, i));
  auto row = mu_extended(dist, g, x);
  double out = 0.0;
  for (int j = 0; j < g.vertex_count(); ++j) out += row[static_cast<size_t>(j)] * F.at_vertex(j);
  return out;
}

// First-critical-scale limit: sum_j p(x,O_j) sum_j' P_{O_j}(Y(s)=O_j') F(O_j').
template <int D>
double predict_first_critical(const MetricGraph<D>& g, const ScalingLaw& scaling,
                              const std::vector<std::pair<int, double>>& levels_j1,
                              const GraphPoint& x, double s, const Observable& F) {
  auto y = ctmc_build(g, scaling, levels_j1);
  double out = 0.0;
  for (int j = 0; j < g.vertex_count(); ++j) {
    double w = hitting_weight(g, x, j);
    if (w == 0.0) continue;
    auto law = ctmc_law_at(y, j, s);
    double inner = 0.0;
    for (int jp = 0; jp < g.vertex_count(); ++jp)
      inner += law[static_cast<size_t>(jp)] * F.at_vertex(jp);
    out += w * inner;
  }
  return out;
}

// State of one trajectory sampled at a horizon while watching the exit
// sections: has it escaped yet, and how far along the graph does it sit.
struct CheckpointSample {
  bool escaped = false;
  double graph_dist = 0.0;  // d_Gamma(Pi^eps(Z), O_j) at the horizon
};

template <int D>
struct CriticalScaleRecord {
  std::vector<CheckpointSample> at;  // one per requested horizon
  size_t filled = 0;                 // samples actually taken before any censoring
  double escape_time = -1.0;         // interpolated first section hit, -1 if none
  bool censored = false;
  bool aborted = false;
  long long steps = 0;
};

// Single trajectory from `start`, monitored against `targets` (levels from
// vertex j), sampled at each of the sorted `horizons`.
template <int D>
CriticalScaleRecord<D> critical_scale_run(const TubeDomain<D>& dom, const Vec<D>& start,
                                          const SectionFamily& targets,
                                          const std::vector<double>& horizons,
                                          const SimConfig& cfg) {
  if (!dom.contains(start)) throw SimulationError("critical_scale_run: start outside domain");
  for (size_t i = 1; i < horizons.size(); ++i)
    if (!(horizons[i] > horizons[i - 1]))
      throw SimulationError("critical_scale_run: horizons must increase strictly");
  dom.validate_family(targets);
  CriticalScaleRecord<D> rec;
  rec.at.resize(horizons.size());
  if (horizons.empty()) return rec;

  const int j = targets.j;
  WalkerState<D> s{start, 0.0};
  Stepper<D> stepper(dom, cfg);
  RngStream rng(cfg.seed, cfg.trajectory_index);
  SectionTracker<D> tracker(dom, targets, SectionTracker<D>::Direction::up);
  if (tracker.initial(start)) rec.escape_time = 0.0;

  size_t next = 0;
  auto sample = [&](const WalkerState<D>& w) {
    CheckpointSample cs;
    cs.escaped = rec.escape_time >= 0.0 && rec.escape_time <= horizons[next];
    cs.graph_dist =
        dom.graph().graph_distance(GraphPoint::at(j), dom.continuous_projection(w.position));
    rec.at[next] = cs;
    ++next;
    rec.filled = next;
  };
  while (next < horizons.size()) {
    if (rec.steps >= cfg.max_steps) {
      rec.censored = true;
      break;
    }
    double t_before = s.time;
    if (!stepper.step(s, rng)) {
      rec.aborted = true;
      break;
    }
    ++rec.steps;
    if (rec.escape_time < 0.0) {
      if (auto c = tracker.advance(s.position)) {
        rec.escape_time = t_before + c->frac * (s.time - t_before);
      }
    }
    while (next < horizons.size() && s.time >= horizons[next]) sample(s);
  }
  return rec;
}

// Empirical P(trajectory sits farther than delta from O_j1 while not yet
// escaped) at time horizon; passes when below the threshold.
template <int D>
TestReport localization_check(const TubeDomain<D>& dom, int j1, double horizon, double delta,
                              int trajectories, const SimConfig& cfg, int workers = 1,
                              double threshold = 0.05) {
  if (trajectories <= 0) throw SimulationError("localization_check: need trajectories");
  cfg.check();
  SectionFamily targets = dom.corrected_family(j1);
  Vec<D> start = dom.graph().position(j1);
  std::vector<char> far(static_cast<size_t>(trajectories), 0);
  std::vector<char> bad(static_cast<size_t>(trajectories), 0);
  parallel_for_indexed(trajectories, workers, [&](long long i) {
    SimConfig local = cfg;
    local.trajectory_index = cfg.trajectory_index + static_cast<uint64_t>(i);
    auto rec = critical_scale_run(dom, start, targets, {horizon}, local);
    if (rec.filled < 1) {
      bad[static_cast<size_t>(i)] = 1;
      return;
    }
    const auto& cs = rec.at[0];
    far[static_cast<size_t>(i)] = (!cs.escaped && cs.graph_dist > delta) ? 1 : 0;
  });
  long long nfar = 0, nbad = 0;
  for (char f : far) nfar += f;
  for (char b : bad) nbad += b;
  double p = static_cast<double>(nfar) / static_cast<double>(trajectories);
  char notes[96];
  std::snprintf(notes, sizeof(notes), "delta=%.6g horizon=%.6g censored=%lld", delta, horizon,
                nbad);
  return TestReport::below("localization", p, threshold, trajectories, notes);
}

}  // namespace tubesim
