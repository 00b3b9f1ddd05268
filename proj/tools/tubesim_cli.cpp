#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tubesim/config.hpp"
#include "tubesim/experiments.hpp"
#include "tubesim/report.hpp"

namespace fs = std::filesystem;
using namespace tubesim;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  int workers = 0;
  long long seed = -1;
};

ExperimentKind expected_kind(const std::string& cmd) {
  if (cmd == "exit-stats") return ExperimentKind::exit_stats;
  if (cmd == "metastable") return ExperimentKind::metastable_intermediate;
  if (cmd == "ctmc-compare") return ExperimentKind::ctmc_compare;
  if (cmd == "pde") return ExperimentKind::pde;
  return ExperimentKind::localization;
}

template <int D>
bool run_exit_stats_cmd(const ExperimentConfig& cfg, const MetricGraph<D>& g,
                        const ScalingLaw& scaling, const fs::path& out, int workers,
                        RunManifest& man) {
  bool ok = true;
  CsvWriter csv(out / "exit_stats.csv",
                {"eps", "edge", "empirical_p", "wilson_lo", "wilson_hi", "limit_p", "mean_time",
                 "mean_se", "limit_scale", "ratio", "ks_d", "chi2_p", "n", "censored",
                 "config_hash"});
  CsvWriter tests(out / "tests.csv", {"eps", "name", "n", "value", "threshold", "verdict", "notes",
                                      "config_hash"});
  SimConfig base;
  base.c_h = cfg.c_h;
  base.max_steps = cfg.max_steps;
  base.seed = cfg.seed;
  for (double eps : cfg.epsilons) {
    auto res = run_exit_stats(g, scaling, eps, cfg.vertex, cfg.levels, cfg.trajectories, base,
                              workers, cfg.start);
    std::string ks_d = res.ks ? fmt(res.ks->value) : std::string();
    std::string chi_p = res.independence ? fmt(res.independence->value) : std::string();
    for (const auto& row : res.edges) {
      csv.row({fmt(eps), fmt(row.edge), fmt(row.frequency), fmt(row.wilson.lo),
               fmt(row.wilson.hi), fmt(row.limit_p), fmt(res.mean.mean), fmt(res.mean.se),
               fmt(res.limit_scale), fmt(res.ratio), ks_d, chi_p,
               fmt(res.ensemble.uncensored_count()), fmt(res.ensemble.censored_count()),
               cfg.hash});
    }
    for (const auto* t : {res.ks ? &*res.ks : nullptr, res.independence ? &*res.independence : nullptr}) {
      if (!t) continue;
      tests.row({fmt(eps), t->name, fmt(t->n), fmt(t->value), fmt(t->threshold),
                 t->pass ? "pass" : "fail", t->notes, cfg.hash});
      ok = ok && t->pass;
    }
    man.censoring.emplace_back(eps, res.ensemble.censoring_rate());
    std::printf("eps=%g: n=%d censored=%d mean=%.6g ratio=%.4f\n", eps,
                res.ensemble.uncensored_count(), res.ensemble.censored_count(), res.mean.mean,
                res.ratio);
  }
  return ok;
}

template <int D>
bool run_metastable_cmd(const ExperimentConfig& cfg, const MetricGraph<D>& g,
                        const ScalingLaw& scaling, const fs::path& out, int workers,
                        RunManifest& man, bool via_pde) {
  bool ok = true;
  CsvWriter csv(out / (via_pde ? "pde.csv" : "metastable.csv"),
                {"eps", "index", "t", "x", "observable", "estimate", "se", "limit",
                 "discrepancy_se", "verdict", "config_hash"});
  SimConfig base;
  base.c_h = cfg.c_h;
  base.max_steps = cfg.max_steps;
  base.seed = cfg.seed;
  GraphPoint x = graph_point_of(g, cfg.x);
  Observable F = make_observable(g, cfg.observable);
  for (double eps : cfg.epsilons) {
    auto res = run_intermediate(g, scaling, eps, cfg.chain_index, x, F, cfg.observable.type,
                                cfg.trajectories, base, workers, cfg.time_value, via_pde);
    csv.row({fmt(eps), fmt(res.index), fmt(res.t), graph_point_label(res.x), res.observable,
             fmt(res.mc.estimate), fmt(res.mc.se), fmt(res.limit), fmt(res.discrepancy_se),
             res.pass ? "pass" : "fail", cfg.hash});
    man.censoring.emplace_back(eps, res.mc.censoring_rate());
    std::printf("eps=%g: estimate=%.6g +- %.3g limit=%.6g (%.2f SE) %s\n", eps, res.mc.estimate,
                res.mc.se, res.limit, res.discrepancy_se, res.pass ? "pass" : "fail");
    ok = ok && res.pass;
  }
  return ok;
}

template <int D>
bool run_critical_cmd(const ExperimentConfig& cfg, const MetricGraph<D>& g,
                      const ScalingLaw& scaling, const fs::path& out, int workers,
                      RunManifest& man, bool localization) {
  bool ok = true;
  CsvWriter csv(out / (localization ? "localization.csv" : "ctmc_compare.csv"),
                localization
                    ? std::vector<std::string>{"eps", "s", "horizon", "delta", "p_far", "threshold",
                                               "escaped", "n", "verdict", "config_hash"}
                    : std::vector<std::string>{"eps", "s", "x", "observable", "estimate", "se",
                                               "ctmc_limit", "exp_minus_kappa_s", "diff", "verdict",
                                               "config_hash"});
  SimConfig base;
  base.c_h = cfg.c_h;
  base.max_steps = cfg.max_steps;
  base.seed = cfg.seed;
  for (double eps : cfg.epsilons) {
    auto res = run_first_critical(g, scaling, eps, cfg.s_values, cfg.trajectories, base, workers,
                                  cfg.delta, cfg.threshold);
    auto y = ctmc_build(g, scaling, TubeDomain<D>(g, scaling, eps).corrected_family(res.j1).levels);
    for (const auto& pt : res.points) {
      if (localization) {
        csv.row({fmt(eps), fmt(pt.s), fmt(pt.horizon), fmt(res.delta), fmt(pt.p_far),
                 fmt(res.threshold), fmt(pt.escaped), fmt(pt.n),
                 pt.loc_pass ? "pass" : "fail", cfg.hash});
      } else {
        double ctmc_limit = ctmc_law_at(y, res.j1, pt.s)[static_cast<size_t>(res.j1)];
        csv.row({fmt(eps), fmt(pt.s), graph_point_label(GraphPoint::at(res.j1)),
                 "collar_indicator", fmt(pt.p_collar), fmt(pt.se), fmt(ctmc_limit), fmt(pt.limit),
                 fmt(pt.diff), pt.pass ? "pass" : "fail", cfg.hash});
      }
      std::printf("eps=%g s=%g: %s=%.6g vs %.6g %s\n", eps, pt.s,
                  localization ? "p_far" : "p_collar", localization ? pt.p_far : pt.p_collar,
                  localization ? res.threshold : pt.limit,
                  (localization ? pt.loc_pass : pt.pass) ? "pass" : "fail");
      ok = ok && (localization ? pt.loc_pass : pt.pass);
    }
    man.censoring.emplace_back(eps, res.trajectories == 0
                                        ? 0.0
                                        : static_cast<double>(res.censored) / res.trajectories);
  }
  return ok;
}

template <int D>
bool run_typed(const std::string& cmd, const ExperimentConfig& cfg, const Options& opts) {
  auto [g, scaling] = build_model<D>(cfg);
  int workers = resolve_workers(cfg.workers);
  if (cmd == "validate") {
    for (double eps : cfg.epsilons) {
      TubeDomain<D> dom(g, scaling, eps);
      std::printf("eps=%g: feasible (min half-width %.6g)\n", eps, dom.min_half_width());
    }
    std::printf("config ok: %d vertices, %d edges, kind=%s, hash=%s\n", g.vertex_count(),
                g.edge_count(), kind_to_string(cfg.kind).c_str(), cfg.hash.c_str());
    return true;
  }
  if (cfg.kind != expected_kind(cmd))
    throw ConfigError("kind: config declares '" + kind_to_string(cfg.kind) +
                      "' but the command expects '" + kind_to_string(expected_kind(cmd)) + "'");
  fs::path out(opts.out);
  fs::create_directories(out);
  RunManifest man;
  man.config_hash = cfg.hash;
  man.seed = cfg.seed;
  man.command = cmd;
  man.started_at = RunManifest::now();
  man.write(out);  // results are invalid without a manifest, so it goes first

  bool ok;
  if (cmd == "exit-stats")
    ok = run_exit_stats_cmd(cfg, g, scaling, out, workers, man);
  else if (cmd == "metastable")
    ok = run_metastable_cmd(cfg, g, scaling, out, workers, man, false);
  else if (cmd == "pde")
    ok = run_metastable_cmd(cfg, g, scaling, out, workers, man, true);
  else if (cmd == "ctmc-compare")
    ok = run_critical_cmd(cfg, g, scaling, out, workers, man, false);
  else
    ok = run_critical_cmd(cfg, g, scaling, out, workers, man, true);

  man.finished_at = RunManifest::now();
  man.write(out);
  return ok;
}

int run(const std::string& cmd, const Options& opts) {
  try {
    ExperimentConfig cfg = load_config(opts.config);
    if (opts.seed >= 0) cfg.seed = static_cast<uint64_t>(opts.seed);
    if (opts.workers > 0) cfg.workers = opts.workers;
    // A run whose data lands outside its own tolerance still completes; 5 flags
    // it for CI without conflating it with a crash (4).
    bool ok = cfg.dimension == 2 ? run_typed<2>(cmd, cfg, opts) : run_typed<3>(cmd, cfg, opts);
    return ok ? 0 : 5;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const GeometryError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const ModelError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "simulation failure: %s\n", e.what());
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reflected diffusion experiments on narrow tube networks"};
  app.require_subcommand(1);
  Options opts;
  std::string selected;
  const std::pair<const char*, const char*> commands[] = {
      {"validate", "parse a config and check domain feasibility for every epsilon"},
      {"exit-stats", "exit place and exit time statistics from a vertex ball"},
      {"metastable", "intermediate-scale observable vs the absorption distribution"},
      {"ctmc-compare", "first-critical-scale occupation vs the vertex CTMC"},
      {"pde", "Neumann heat solution via the probabilistic representation"},
      {"localization", "non-escaped trajectories stay near the smallest vertex"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opts.config, "experiment config file (JSON)")->required();
    sub->add_option("--out", opts.out, "output directory for CSV results and the manifest");
    sub->add_option("--workers", opts.workers,
                    "worker threads (0: TUBESIM_WORKERS, then hardware)");
    sub->add_option("--seed", opts.seed, "override the config seed");
    sub->callback([&selected, name = std::string(name)] { selected = name; });
  }
  CLI11_PARSE(app, argc, argv);
  return run(selected, opts);
}
