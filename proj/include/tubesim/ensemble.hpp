#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "tubesim/sde.hpp"
#include "tubesim/stats.hpp"

namespace tubesim {

// One experiment's worth of exit records, all sharing the same domain
// parameters; censored records are carried but excluded from statistics.
template <int D>
struct ExitEnsemble {
  double eps = 0.0;
  int j = -1;                                 // source vertex
  std::vector<std::pair<int, double>> levels; // section levels per incident edge
  double delta = 0.0;                         // inner cycle level, 0 when unused
  std::vector<ExitRecord<D>> records;

  int censored_count() const {
    int n = 0;
    for (const auto& r : records) n += r.censored ? 1 : 0;
    return n;
  }
  int uncensored_count() const { return static_cast<int>(records.size()) - censored_count(); }
  double censoring_rate() const {
    return records.empty() ? 0.0
                           : static_cast<double>(censored_count()) / static_cast<double>(records.size());
  }
  std::vector<double> exit_times() const {
    std::vector<double> t;
    t.reserve(records.size());
    for (const auto& r : records)
      if (!r.censored) t.push_back(r.exit_time);
    return t;
  }
  std::vector<int> exit_edges() const {
    std::vector<int> e;
    e.reserve(records.size());
    for (const auto& r : records)
      if (!r.censored) e.push_back(r.exit_edge);
    return e;
  }
};

struct TestReport {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  int n = 0;
  std::string notes;

  // pass iff value < threshold (e.g. a KS distance against its critical value)
  static TestReport below(std::string name, double value, double threshold, int n,
                          std::string notes = {}) {
    return TestReport{std::move(name), value, threshold, value < threshold, n, std::move(notes)};
  }
  // pass iff value > threshold (e.g. a p-value against a significance floor)
  static TestReport above(std::string name, double value, double threshold, int n,
                          std::string notes = {}) {
    return TestReport{std::move(name), value, threshold, value > threshold, n, std::move(notes)};
  }

  std::string csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%d,%.12g,%.12g,%s", name.c_str(), n, value, threshold,
                  pass ? "pass" : "fail");
    std::string row(buf);
    if (!notes.empty()) row += "," + notes;
    return row;
  }
  std::string text() const {
    char buf[320];
    std::snprintf(buf, sizeof(buf), "%-28s n=%-7d value=%.6g threshold=%.6g %s%s%s", name.c_str(),
                  n, value, threshold, pass ? "PASS" : "FAIL", notes.empty() ? "" : "  ",
                  notes.c_str());
    return std::string(buf);
  }
};

struct EdgeFrequency {
  int edge = -1;
  double frequency = 0.0;
  stats::Interval wilson;
};

namespace detail {

template <int D>
std::vector<int> incident_of(const ExitEnsemble<D>& ens) {
  std::vector<int> edges;
  for (const auto& [k, lvl] : ens.levels) edges.push_back(k);
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace detail

// Per-edge exit frequencies with 99% Wilson intervals over uncensored records.
template <int D>
std::vector<EdgeFrequency> exit_place_distribution(const ExitEnsemble<D>& ens) {
  const int n = ens.uncensored_count();
  if (n < 100) throw stats::StatsError("exit_place_distribution: need at least 100 uncensored records");
  std::vector<int> edges = detail::incident_of(ens);
  std::vector<EdgeFrequency> out;
  for (int k : edges) {
    long long hits = 0;
    for (const auto& r : ens.records)
      if (!r.censored && r.exit_edge == k) ++hits;
    EdgeFrequency f;
    f.edge = k;
    f.frequency = static_cast<double>(hits) / static_cast<double>(n);
    f.wilson = stats::wilson(hits, n);
    out.push_back(f);
  }
  return out;
}

template <int D>
stats::Summary mean_exit_time(const ExitEnsemble<D>& ens) {
  if (ens.uncensored_count() < 100)
    throw stats::StatsError("mean_exit_time: need at least 100 uncensored records");
  return stats::summarize(ens.exit_times());
}

template <int D>
stats::Summary conditional_mean_exit_time(const ExitEnsemble<D>& ens, int k) {
  std::vector<double> t;
  for (const auto& r : ens.records)
    if (!r.censored && r.exit_edge == k) t.push_back(r.exit_time);
  if (t.size() < 50)
    throw stats::StatsError("conditional_mean_exit_time: need at least 50 exits through the edge");
  return stats::summarize(t);
}

// One-sample KS of exit times against Exp(theoretical_mean), 99% critical value.
template <int D>
TestReport ks_exponential(const ExitEnsemble<D>& ens, double theoretical_mean) {
  auto times = ens.exit_times();
  if (times.size() < 500)
    throw stats::StatsError("ks_exponential: need at least 500 uncensored records");
  auto ks = stats::ks_exponential(times, theoretical_mean);
  double crit = stats::kolmogorov_critical(0.01, ks.n);
  char notes[96];
  std::snprintf(notes, sizeof(notes), "censoring=%.4g", ens.censoring_rate());
  return TestReport::below("ks_exponential", ks.d, crit, ks.n, notes);
}

// Chi-square independence of (exit edge) x (exit-time quartile), pass at p > 0.01.
template <int D>
TestReport independence_test(const ExitEnsemble<D>& ens) {
  auto edges = ens.exit_edges();
  if (edges.size() < 500)
    throw stats::StatsError("independence_test: need at least 500 uncensored records");
  auto res = stats::independence_edge_time(edges, ens.exit_times());
  char notes[128];
  std::snprintf(notes, sizeof(notes), "stat=%.6g dof=%d censoring=%.4g", res.stat, res.dof,
                ens.censoring_rate());
  return TestReport::above("edge_time_independence", res.p, 0.01, static_cast<int>(edges.size()),
                           notes);
}

}  // namespace tubesim
