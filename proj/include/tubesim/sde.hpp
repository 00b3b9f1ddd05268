#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tubesim/rng.hpp"
#include "tubesim/tube_domain.hpp"

namespace tubesim {

struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  double c_h = 0.01;             // h = c_h * (min tube half-width)^2
  long long max_steps = 1'000'000'000;
  uint64_t seed = 1;
  uint64_t trajectory_index = 0;

  void check() const {
    if (!(c_h > 0.0 && c_h <= 0.05))
      throw SimulationError("c_h must lie in (0, 0.05]: RMS free step must stay under "
                            "0.15 of the tube half-width");
    if (max_steps <= 0) throw SimulationError("max_steps must be positive");
  }
};

template <int D>
struct WalkerState {
  Vec<D> position{};
  double time = 0.0;
};

template <int D>
struct ExitRecord {
  double exit_time = 0.0;
  int exit_edge = -1;
  int family_vertex = -1;
  Vec<D> exit_point{};
  long long steps = 0;
  int cycles = 0;
  bool censored = false;
  bool aborted = false;
};

enum class CycleKind { tau, sigma_return, sigma_exit };

struct CycleEvent {
  CycleKind kind;
  double time;
  int edge;
  double abscissa;
};

// Euler proposal with iterated specular reflection. Rejected proposals retry
// with a quartered step and fresh noise; the clock advances by the step size
// actually accepted.
template <int D>
class Stepper {
 public:
  Stepper(const TubeDomain<D>& dom, const SimConfig& cfg) : dom_(dom) {
    cfg.check();
    double w = dom.min_half_width();
    h_ = cfg.c_h * w * w;
  }

  double h() const { return h_; }

  // One accepted move; false means reflection failed at the minimum step.
  bool step(WalkerState<D>& s, RngStream& rng) {
    double ha = h_;
    for (int attempt = 0; attempt < 5; ++attempt, ha *= 0.25) {
      Vec<D> xi = rng.template gauss<D>();
      Vec<D> cand = s.position + std::sqrt(2.0 * ha) * xi;
      bool ok = dom_.contains_cached(cand, hint_);
      for (int iter = 0; iter < 8 && !ok; ++iter) {
        BoundaryData<D> bd = dom_.boundary_reflect_data(cand);
        double pen = dot(cand - bd.point, bd.normal);
        if (pen >= 0.0) break;  // tangent plane faces away: corner, retry smaller
        cand -= 2.0 * pen * bd.normal;
        ok = dom_.contains_cached(cand, hint_);
      }
      if (ok) {
        s.position = cand;
        s.time += ha;
        return true;
      }
    }
    return false;
  }

 private:
  const TubeDomain<D>& dom_;
  double h_;
  int hint_ = 0;
};

// Crossing detector for one section family: fires when the projected
// abscissa from O_j first reaches a level (upward) or falls to it (downward).
template <int D>
class SectionTracker {
 public:
  enum class Direction { up, down };

  SectionTracker(const TubeDomain<D>& dom, const SectionFamily& f, Direction dir)
      : dom_(dom), family_(f), dir_(dir) {
    dom.validate_family(f);
    anchor_ = dom.graph().position(f.j);
    double extreme = dir == Direction::up ? std::numeric_limits<double>::infinity() : 0.0;
    for (auto [k, level] : f.levels)
      extreme = dir == Direction::up ? std::min(extreme, level) : std::max(extreme, level);
    // cheap per-step prefilter: abscissa <= |z - O_j|, and in the down case
    // abscissa >= |z - O_j| - r_j inside the monitored neighborhood
    skip_r2_ = dir == Direction::up
                   ? extreme * extreme
                   : (extreme + dom.radius(f.j)) * (extreme + dom.radius(f.j));
  }

  struct Crossing {
    int edge;
    double level;
    double frac;  // position of the crossing within the step, in [0,1]
  };

  void reset(const Vec<D>& z) {
    prev_ = project(z);
  }

  const SectionFamily& family() const { return family_; }

  // Immediate trigger at the start position (degenerate starts).
  std::optional<Crossing> initial(const Vec<D>& z) {
    reset(z);
    if (!prev_) return std::nullopt;
    for (auto [k, level] : family_.levels) {
      if (k != prev_->first) continue;
      double a = prev_->second;
      if ((dir_ == Direction::up && a >= level) || (dir_ == Direction::down && a <= level))
        return Crossing{k, level, 0.0};
    }
    return std::nullopt;
  }

  std::optional<Crossing> advance(const Vec<D>& z) {
    if (dir_ == Direction::up && dist2(z, anchor_) < skip_r2_) {
      dirty_ = true;  // prev_ is stale, refresh lazily when we re-enter range
      return std::nullopt;
    }
    if (dirty_) {
      prev_ = std::nullopt;
      dirty_ = false;
    }
    auto cur = project(z);
    std::optional<Crossing> hit;
    if (cur) {
      for (auto [k, level] : family_.levels) {
        if (k != cur->first) continue;
        double a = cur->second;
        bool fired = dir_ == Direction::up ? a >= level : a <= level;
        if (!fired) break;
        double frac = 1.0;
        if (prev_ && prev_->first == k) {
          double a0 = prev_->second;
          if ((dir_ == Direction::up && a0 < level) || (dir_ == Direction::down && a0 > level))
            frac = std::clamp((level - a0) / (a - a0), 0.0, 1.0);
          else
            break;  // was already past the level before this step: not a crossing
        }
        hit = Crossing{k, level, frac};
        break;
      }
    }
    prev_ = cur;
    return hit;
  }

 private:
  std::optional<std::pair<int, double>> project(const Vec<D>& z) const {
    return dom_.section_coordinate(z, family_.j);
  }

  const TubeDomain<D>& dom_;
  SectionFamily family_;
  Direction dir_;
  Vec<D> anchor_;
  double skip_r2_;
  bool dirty_ = false;
  std::optional<std::pair<int, double>> prev_;
};

namespace detail {

// Uniform point on the (d-1)-disk of radius hw, in the transverse frame of
// (j, k); used to randomize starts over a cross-section.
template <int D>
Vec<D> section_point(const TubeDomain<D>& dom, int j, int k, double level, bool randomize,
                     RngStream& rng);

template <>
inline Vec<2> section_point<2>(const TubeDomain<2>& dom, int j, int k, double level,
                               bool randomize, RngStream& rng) {
  Vec<2> z = dom.axis_point(j, k, level);
  if (!randomize) return z;
  Vec<2> e = dom.graph().edge_direction(j, k);
  Vec<2> n{{-e[1], e[0]}};
  return z + ((2.0 * rng.uniform() - 1.0) * dom.half_width(k)) * n;
}

template <>
inline Vec<3> section_point<3>(const TubeDomain<3>& dom, int j, int k, double level,
                               bool randomize, RngStream& rng) {
  Vec<3> z = dom.axis_point(j, k, level);
  if (!randomize) return z;
  Vec<3> e = dom.graph().edge_direction(j, k);
  auto frame = detail::transverse_frame(e);
  double u0, u1;
  rng.uniform2(u0, u1);
  double rho = dom.half_width(k) * std::sqrt(u0);
  double a = 2.0 * M_PI * u1;
  return z + (rho * std::cos(a)) * frame[0] + (rho * std::sin(a)) * frame[1];
}

}  // namespace detail

// Start point on the collar section C_{eps,j}(r_j + 3 eps). edge_choice < 0
// picks the tube at random with probability proportional to its section
// area (lambda^{d-1} weights); randomize draws the transverse offset
// uniformly over the section disk instead of using the axis point.
template <int D>
Vec<D> collar_start(const TubeDomain<D>& dom, int j, int edge_choice, bool randomize,
                    RngStream& rng) {
  const auto& inc = dom.graph().incident(j);
  if (inc.empty()) throw SimulationError("collar_start: vertex has no incident edges");
  int k = edge_choice;
  if (k < 0) {
    double total = 0.0;
    for (int e : inc) total += std::pow(dom.graph().edge(e).lambda, D - 1);
    double u = rng.uniform() * total;
    k = inc.back();
    for (int e : inc) {
      u -= std::pow(dom.graph().edge(e).lambda, D - 1);
      if (u <= 0.0) {
        k = e;
        break;
      }
    }
  }
  return detail::section_point<D>(dom, j, k, dom.collar_level(j), randomize, rng);
}

// First hit of any section in `families`, all levels approached from the
// O_j side. Exit time is linearly interpolated inside the crossing step.
template <int D>
ExitRecord<D> run_until_sections(const TubeDomain<D>& dom, const Vec<D>& start,
                                 const std::vector<SectionFamily>& families,
                                 const SimConfig& cfg) {
  if (!dom.contains(start)) throw SimulationError("run_until_sections: start outside domain");
  std::vector<SectionTracker<D>> trackers;
  trackers.reserve(families.size());
  for (const auto& f : families)
    trackers.emplace_back(dom, f, SectionTracker<D>::Direction::up);

  ExitRecord<D> rec;
  for (auto& tr : trackers) {
    if (auto c = tr.initial(start)) {
      rec.exit_edge = c->edge;
      rec.family_vertex = tr.family().j;
      rec.exit_point = start;
      return rec;
    }
  }
  WalkerState<D> s{start, 0.0};
  Stepper<D> stepper(dom, cfg);
  RngStream rng(cfg.seed, cfg.trajectory_index);
  Vec<D> prev_pos = start;
  double prev_time = 0.0;
  while (rec.steps < cfg.max_steps) {
    if (!stepper.step(s, rng)) {
      rec.aborted = true;
      return rec;
    }
    ++rec.steps;
    for (auto& tr : trackers) {
      if (auto c = tr.advance(s.position)) {
        rec.exit_edge = c->edge;
        rec.family_vertex = tr.family().j;
        rec.exit_time = prev_time + c->frac * (s.time - prev_time);
        rec.exit_point = prev_pos + c->frac * (s.position - prev_pos);
        return rec;
      }
    }
    prev_pos = s.position;
    prev_time = s.time;
  }
  rec.censored = true;
  rec.exit_time = s.time;
  return rec;
}

// Full cycle decomposition: tau_n hits C(delta) going out, sigma_n then hits
// either the collar C(r_j + 3 eps) (cycle completes) or a target section
// (exit). Returns the exit record plus the alternating event log.
template <int D>
std::pair<ExitRecord<D>, std::vector<CycleEvent>> run_cycles(const TubeDomain<D>& dom,
                                                             const Vec<D>& start, double delta,
                                                             const SectionFamily& targets,
                                                             const SimConfig& cfg) {
  if (!dom.contains(start)) throw SimulationError("run_cycles: start outside domain");
  int j = targets.j;
  double collar = dom.collar_level(j);
  double min_target = std::numeric_limits<double>::infinity();
  for (auto [k, level] : targets.levels) min_target = std::min(min_target, level);
  if (!(collar < delta && delta < min_target))
    throw SimulationError("run_cycles: need r_j + 3 eps < delta < min target level");

  SectionFamily delta_family;
  delta_family.j = j;
  for (auto [k, level] : targets.levels) delta_family.levels.emplace_back(k, delta);
  SectionFamily collar_family = dom.collar_family(j);

  SectionTracker<D> tau_tr(dom, delta_family, SectionTracker<D>::Direction::up);
  SectionTracker<D> exit_tr(dom, targets, SectionTracker<D>::Direction::up);
  SectionTracker<D> ret_tr(dom, collar_family, SectionTracker<D>::Direction::down);

  ExitRecord<D> rec;
  std::vector<CycleEvent> events;
  WalkerState<D> s{start, 0.0};
  Stepper<D> stepper(dom, cfg);
  RngStream rng(cfg.seed, cfg.trajectory_index);
  bool await_tau = true;
  tau_tr.initial(start);
  exit_tr.initial(start);
  Vec<D> prev_pos = start;
  double prev_time = 0.0;
  while (rec.steps < cfg.max_steps) {
    if (!stepper.step(s, rng)) {
      rec.aborted = true;
      return {rec, events};
    }
    ++rec.steps;
    // the exit sections are armed in every phase: hitting C(L) while waiting
    // for tau still ends the trajectory (it must cross delta on the way, so
    // order the checks tau-first within the step)
    if (await_tau) {
      if (auto c = tau_tr.advance(s.position)) {
        double t = prev_time + c->frac * (s.time - prev_time);
        events.push_back({CycleKind::tau, t, c->edge, delta});
        ++rec.cycles;
        await_tau = false;
        ret_tr.reset(s.position);
      }
    }
    if (!await_tau) {
      if (auto c = exit_tr.advance(s.position)) {
        double t = prev_time + c->frac * (s.time - prev_time);
        events.push_back({CycleKind::sigma_exit, t, c->edge, c->level});
        rec.exit_edge = c->edge;
        rec.family_vertex = j;
        rec.exit_time = t;
        rec.exit_point = prev_pos + c->frac * (s.position - prev_pos);
        return {rec, events};
      }
      if (auto c = ret_tr.advance(s.position)) {
        double t = prev_time + c->frac * (s.time - prev_time);
        events.push_back({CycleKind::sigma_return, t, c->edge, collar});
        await_tau = true;
        tau_tr.reset(s.position);
      }
    } else {
      exit_tr.advance(s.position);
    }
    prev_pos = s.position;
    prev_time = s.time;
  }
  rec.censored = true;
  rec.exit_time = s.time;
  return {rec, events};
}

struct PositionResult {
  bool censored = false;
  bool aborted = false;
  long long steps = 0;
  double time = 0.0;
};

// Walker state at the first step whose clock passes t (no interpolation).
template <int D>
PositionResult position_at(const TubeDomain<D>& dom, Vec<D>& z, double t, const SimConfig& cfg) {
  if (!dom.contains(z)) throw SimulationError("position_at: start outside domain");
  PositionResult res;
  if (t <= 0.0) return res;
  WalkerState<D> s{z, 0.0};
  Stepper<D> stepper(dom, cfg);
  RngStream rng(cfg.seed, cfg.trajectory_index);
  while (s.time < t) {
    if (res.steps >= cfg.max_steps) {
      res.censored = true;
      break;
    }
    if (!stepper.step(s, rng)) {
      res.aborted = true;
      break;
    }
    ++res.steps;
  }
  z = s.position;
  res.time = s.time;
  return res;
}

}  // namespace tubesim
