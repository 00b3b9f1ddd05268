#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "tubesim/graph.hpp"
#include "tubesim/scaling.hpp"

namespace tubesim {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ExperimentKind { exit_stats, metastable_intermediate, ctmc_compare, pde, localization };

inline ExperimentKind kind_from_string(const std::string& s) {
  if (s == "exit-stats") return ExperimentKind::exit_stats;
  if (s == "metastable-intermediate") return ExperimentKind::metastable_intermediate;
  if (s == "ctmc-compare") return ExperimentKind::ctmc_compare;
  if (s == "pde") return ExperimentKind::pde;
  if (s == "localization") return ExperimentKind::localization;
  throw ConfigError("kind: unknown experiment kind '" + s + "'");
}

inline std::string kind_to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::exit_stats: return "exit-stats";
    case ExperimentKind::metastable_intermediate: return "metastable-intermediate";
    case ExperimentKind::ctmc_compare: return "ctmc-compare";
    case ExperimentKind::pde: return "pde";
    case ExperimentKind::localization: return "localization";
  }
  return "unknown";
}

struct StartSpec {
  std::string mode = "weighted";  // "axis" (fixed edge) or "weighted" (width-weighted edge)
  int edge = -1;                  // edge for axis mode
  bool randomize_transverse = false;
};

struct ObservableSpec {
  std::string type = "bump";  // bump | constant | coordinate
  int vertex = 0;
  double value = 1.0;
  int axis = 0;
};

struct GraphPointSpec {
  bool is_vertex = true;
  int vertex = 0;
  int edge = 0;
  double arc = 0.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::exit_stats;
  int dimension = 2;
  std::vector<std::vector<double>> vertices;
  struct EdgeConfig {
    int a, b;
    double lambda;
  };
  std::vector<EdgeConfig> edges;
  std::vector<double> c, beta;
  std::vector<double> epsilons;
  int trajectories = 1000;
  uint64_t seed = 1;
  double c_h = 0.01;
  long long max_steps = 1'000'000'000;
  int workers = 0;  // 0: resolve via environment / hardware

  int vertex = 0;                                      // source vertex
  std::optional<std::vector<std::pair<int, double>>> levels;  // none = auto (eps-corrected)
  StartSpec start;
  int chain_index = 1;
  std::optional<double> time_value;  // none = geometric-mean rule
  GraphPointSpec x;
  ObservableSpec observable;
  std::vector<double> s_values{1.0};
  double delta = 0.0;  // 0 = auto
  double threshold = 0.05;

  std::string hash;  // FNV-1a of the canonical serialization, hex
};

namespace detail {

inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename T>
T get_field(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(key + ": required field missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.kind = kind_from_string(detail::get_field<std::string>(j, "kind"));
  cfg.dimension = detail::get_field<int>(j, "dimension");
  if (cfg.dimension != 2 && cfg.dimension != 3)
    throw ConfigError("dimension: must be 2 or 3");

  const auto& graph = j.contains("graph") ? j.at("graph") : throw ConfigError("graph: required field missing");
  for (const auto& v : detail::get_field<std::vector<std::vector<double>>>(graph, "vertices")) {
    if (static_cast<int>(v.size()) != cfg.dimension)
      throw ConfigError("graph.vertices: coordinate count must equal dimension");
    cfg.vertices.push_back(v);
  }
  if (!graph.contains("edges")) throw ConfigError("graph.edges: required field missing");
  for (const auto& e : graph.at("edges")) {
    ExperimentConfig::EdgeConfig es{detail::get_field<int>(e, "a"), detail::get_field<int>(e, "b"),
                                  detail::get_or<double>(e, "lambda", 1.0)};
    const int nv = static_cast<int>(cfg.vertices.size());
    if (es.a < 0 || es.a >= nv || es.b < 0 || es.b >= nv)
      throw ConfigError("graph.edges: endpoint id out of range");
    cfg.edges.push_back(es);
  }

  const auto& scaling = j.contains("scaling") ? j.at("scaling") : throw ConfigError("scaling: required field missing");
  cfg.c = detail::get_field<std::vector<double>>(scaling, "c");
  cfg.beta = detail::get_field<std::vector<double>>(scaling, "beta");
  if (cfg.c.size() != cfg.vertices.size() || cfg.beta.size() != cfg.vertices.size())
    throw ConfigError("scaling: c and beta must list one value per vertex");

  cfg.epsilons = detail::get_field<std::vector<double>>(j, "epsilons");
  if (cfg.epsilons.empty()) throw ConfigError("epsilons: need at least one value");
  for (double e : cfg.epsilons)
    if (!(e > 0.0)) throw ConfigError("epsilons: values must be positive");

  cfg.trajectories = detail::get_or<int>(j, "trajectories", 1000);
  if (cfg.trajectories <= 0) throw ConfigError("trajectories: must be positive");
  cfg.seed = detail::get_or<uint64_t>(j, "seed", 1);
  cfg.c_h = detail::get_or<double>(j, "c_h", 0.01);
  cfg.max_steps = detail::get_or<long long>(j, "max_steps", 1'000'000'000);
  cfg.workers = detail::get_or<int>(j, "workers", 0);

  cfg.vertex = detail::get_or<int>(j, "vertex", 0);
  if (cfg.vertex < 0 || cfg.vertex >= static_cast<int>(cfg.vertices.size()))
    throw ConfigError("vertex: id out of range");

  if (j.contains("levels") && !j.at("levels").is_string()) {
    std::vector<std::pair<int, double>> lv;
    for (const auto& item : j.at("levels")) {
      int k = detail::get_field<int>(item, "edge");
      double level = detail::get_field<double>(item, "level");
      if (k < 0 || k >= static_cast<int>(cfg.edges.size()))
        throw ConfigError("levels: edge id out of range");
      if (!(level > 0.0)) throw ConfigError("levels: levels must be positive");
      lv.emplace_back(k, level);
    }
    cfg.levels = std::move(lv);
  } else if (j.contains("levels") && j.at("levels").get<std::string>() != "auto") {
    throw ConfigError("levels: expected \"auto\" or an array of {edge, level}");
  }

  if (j.contains("start")) {
    const auto& s = j.at("start");
    cfg.start.mode = detail::get_or<std::string>(s, "mode", "weighted");
    if (cfg.start.mode != "axis" && cfg.start.mode != "weighted")
      throw ConfigError("start.mode: expected \"axis\" or \"weighted\"");
    cfg.start.edge = detail::get_or<int>(s, "edge", -1);
    cfg.start.randomize_transverse = detail::get_or<bool>(s, "randomize_transverse", false);
    if (cfg.start.mode == "axis" &&
        (cfg.start.edge < 0 || cfg.start.edge >= static_cast<int>(cfg.edges.size())))
      throw ConfigError("start.edge: required (and in range) for axis mode");
  }

  cfg.chain_index = detail::get_or<int>(j, "chain_index", 1);
  if (j.contains("time_rule")) {
    const auto& t = j.at("time_rule");
    if (t.is_number()) {
      cfg.time_value = t.get<double>();
      if (!(*cfg.time_value > 0.0)) throw ConfigError("time_rule: time must be positive");
    } else if (!(t.is_string() && t.get<std::string>() == "geometric-mean")) {
      throw ConfigError("time_rule: expected \"geometric-mean\" or a positive number");
    }
  }

  if (j.contains("x")) {
    const auto& x = j.at("x");
    if (x.contains("vertex")) {
      cfg.x.is_vertex = true;
      cfg.x.vertex = detail::get_field<int>(x, "vertex");
      if (cfg.x.vertex < 0 || cfg.x.vertex >= static_cast<int>(cfg.vertices.size()))
        throw ConfigError("x.vertex: id out of range");
    } else {
      cfg.x.is_vertex = false;
      cfg.x.edge = detail::get_field<int>(x, "edge");
      cfg.x.arc = detail::get_field<double>(x, "arc");
      if (cfg.x.edge < 0 || cfg.x.edge >= static_cast<int>(cfg.edges.size()))
        throw ConfigError("x.edge: id out of range");
    }
  } else {
    cfg.x.is_vertex = true;
    cfg.x.vertex = cfg.vertex;
  }

  if (j.contains("observable")) {
    const auto& o = j.at("observable");
    cfg.observable.type = detail::get_or<std::string>(o, "type", "bump");
    if (cfg.observable.type != "bump" && cfg.observable.type != "constant" &&
        cfg.observable.type != "coordinate")
      throw ConfigError("observable.type: expected bump, constant, or coordinate");
    cfg.observable.vertex = detail::get_or<int>(o, "vertex", 0);
    cfg.observable.value = detail::get_or<double>(o, "value", 1.0);
    cfg.observable.axis = detail::get_or<int>(o, "axis", 0);
    if (cfg.observable.type == "bump" &&
        (cfg.observable.vertex < 0 || cfg.observable.vertex >= static_cast<int>(cfg.vertices.size())))
      throw ConfigError("observable.vertex: id out of range");
    if (cfg.observable.type == "coordinate" &&
        (cfg.observable.axis < 0 || cfg.observable.axis >= cfg.dimension))
      throw ConfigError("observable.axis: out of range for dimension");
  }

  cfg.s_values = detail::get_or<std::vector<double>>(j, "s_values", {1.0});
  for (double s : cfg.s_values)
    if (!(s > 0.0)) throw ConfigError("s_values: values must be positive");
  cfg.delta = detail::get_or<double>(j, "delta", 0.0);
  cfg.threshold = detail::get_or<double>(j, "threshold", 0.05);

  cfg.hash = detail::hex64(detail::fnv1a(j.dump()));
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

// Instantiate the graph and scaling; every structural check runs here.
template <int D>
std::pair<MetricGraph<D>, ScalingLaw> build_model(const ExperimentConfig& cfg) {
  if (cfg.dimension != D) throw ConfigError("dimension: config does not match the requested build");
  std::vector<Vec<D>> pos;
  for (const auto& v : cfg.vertices) {
    Vec<D> p{};
    for (int i = 0; i < D; ++i) p[i] = v[static_cast<size_t>(i)];
    pos.push_back(p);
  }
  std::vector<EdgeSpec> edges;
  for (const auto& e : cfg.edges) edges.push_back({e.a, e.b, e.lambda, -1.0});
  auto g = MetricGraph<D>::build(pos, edges);
  auto problems = g.validate();
  if (!problems.empty()) throw ConfigError("graph: " + problems.front());
  ScalingLaw scaling(cfg.c, cfg.beta, D);
  return {std::move(g), std::move(scaling)};
}

}  // namespace tubesim
