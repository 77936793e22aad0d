#include <cmath>
#include <fstream>
#include <set>

#include "headprune/errors.hpp"
#include "headprune/external_oracle.hpp"
#include "headprune/harness.hpp"

namespace headprune {
namespace {

using nlohmann::json;

const std::set<std::string> kTopLevelKeys = {
    "strategy", "geometry", "budget",    "cost_mode",  "seed",  "trials",
    "workers",  "output_dir", "label",   "model_dims", "oracle"};

class Problems {
 public:
  void add(std::string p) { items_.push_back(std::move(p)); }
  bool empty() const { return items_.empty(); }
  [[noreturn]] void raise() { throw ConfigError(std::move(items_)); }

  // Runs `fn`, recording a ConfigError or JSON type error against `field`.
  template <class Fn>
  void guard(const std::string& field, Fn&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      for (const auto& p : e.problems()) add(field + ": " + p);
    } catch (const json::exception& e) {
      add(field + ": " + e.what());
    }
  }

 private:
  std::vector<std::string> items_;
};

double percent(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v) || v < 0.0 || v > 100.0) {
    throw ConfigError(what + " must be a percent in [0, 100]");
  }
  return v;
}

WeightMatrix weights_from(const json& section, const std::optional<Geometry>& geometry,
                          bool allow_generate) {
  if (section.contains("weights")) {
    auto w = section.at("weights").get<WeightMatrix>();
    weight_geometry(w);
    return w;
  }
  if (allow_generate && section.contains("generate")) {
    if (!geometry) throw ConfigError("'generate' requires the top-level 'geometry' field");
    const auto& g = section.at("generate");
    HeavyTailedWeights params;
    params.nonpositive_count = g.at("nonpositive_count").get<int>();
    params.seed = g.value("seed", std::uint64_t{0});
    params.negative_scale = g.value("negative_scale", params.negative_scale);
    params.log_median = g.value("log_median", params.log_median);
    params.log_sigma = g.value("log_sigma", params.log_sigma);
    return generate_weights(*geometry, params);
  }
  if (section.contains("uniform_weight")) {
    if (!geometry) throw ConfigError("'uniform_weight' requires the top-level 'geometry' field");
    const double v = section.at("uniform_weight").get<double>();
    return WeightMatrix(static_cast<std::size_t>(geometry->layers),
                        std::vector<double>(static_cast<std::size_t>(geometry->heads_per_layer), v));
  }
  throw ConfigError(allow_generate ? "needs 'weights', 'generate' or 'uniform_weight'"
                                   : "needs 'weights' or 'uniform_weight'");
}

OracleConfig parse_oracle(const json& section, const std::optional<Geometry>& geometry,
                          Problems& problems) {
  if (!section.is_object()) {
    problems.add("oracle: must be an object with exactly one of additive, supermodular, table, external");
    return {};
  }
  std::vector<std::string> kinds;
  for (const auto& [key, value] : section.items()) kinds.push_back(key);
  if (kinds.size() != 1) {
    std::string listed;
    for (const auto& k : kinds) listed += (listed.empty() ? "" : ", ") + k;
    problems.add("oracle: exactly one oracle spec is required, found " +
                 std::to_string(kinds.size()) + (listed.empty() ? "" : " (" + listed + ")"));
    return {};
  }
  const std::string& kind = kinds.front();
  const json& body = section.at(kind);
  const std::string field = "oracle." + kind;
  OracleConfig out;

  if (kind == "additive") {
    AdditiveOracleSpec spec;
    problems.guard(field + ".baseline", [&] { spec.baseline = percent(body.at("baseline"), "baseline"); });
    problems.guard(field + ".weights", [&] { spec.weights = weights_from(body, geometry, true); });
    problems.guard(field + ".noise_sigma", [&] {
      spec.noise_sigma = body.value("noise_sigma", 0.0);
      if (!(spec.noise_sigma >= 0.0)) throw ConfigError("must be non-negative");
    });
    problems.guard(field + ".seed", [&] { spec.seed = body.value("seed", std::uint64_t{0}); });
    out = AdditiveOracleConfig{std::move(spec)};
  } else if (kind == "supermodular") {
    SupermodularOracleSpec spec;
    problems.guard(field + ".baseline", [&] { spec.baseline = percent(body.at("baseline"), "baseline"); });
    problems.guard(field + ".weights", [&] {
      spec.weights = weights_from(body, geometry, false);
      for (const auto& row : spec.weights) {
        for (double w : row) {
          if (w < 0.0) throw ConfigError("must be non-negative");
        }
      }
    });
    problems.guard(field + ".growth", [&] {
      spec.growth = body.value("growth", 0.0);
      if (!(spec.growth >= 0.0)) throw ConfigError("must be non-negative");
    });
    out = SupermodularOracleConfig{std::move(spec)};
  } else if (kind == "table") {
    TableOracleConfig cfg;
    problems.guard(field + ".path", [&] { cfg.path = body.at("path").get<std::string>(); });
    out = cfg;
  } else if (kind == "external") {
    ExternalOracleConfig cfg;
    problems.guard(field + ".command", [&] {
      cfg.command = body.at("command").get<std::string>();
      if (cfg.command.empty()) throw ConfigError("must not be empty");
    });
    out = cfg;
  } else {
    problems.add("oracle: unknown oracle kind '" + kind + "'");
  }
  return out;
}

std::optional<Geometry> oracle_geometry(const OracleConfig& oracle) {
  if (const auto* a = std::get_if<AdditiveOracleConfig>(&oracle)) {
    if (!a->spec.weights.empty()) return weight_geometry(a->spec.weights);
  }
  if (const auto* s = std::get_if<SupermodularOracleConfig>(&oracle)) {
    if (!s->spec.weights.empty()) return weight_geometry(s->spec.weights);
  }
  return std::nullopt;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  Problems problems;
  RunConfig c;

  for (const auto& [key, value] : doc.items()) {
    if (!kTopLevelKeys.contains(key)) problems.add("unknown field '" + key + "'");
  }

  problems.guard("strategy", [&] {
    if (doc.contains("strategy")) c.strategy = parse_strategy(doc.at("strategy").get<std::string>());
  });
  problems.guard("geometry", [&] {
    if (doc.contains("geometry")) c.geometry = doc.at("geometry").get<Geometry>();
  });
  problems.guard("budget", [&] {
    if (!doc.contains("budget")) throw ConfigError("is required (null means unbounded)");
    const auto& b = doc.at("budget");
    if (b.is_null()) {
      c.budget = kUnbounded;
    } else {
      if (!b.is_number()) throw ConfigError("must be a number or null");
      c.budget = b.get<double>();
      if (!std::isfinite(c.budget) || c.budget < 0.0) throw ConfigError("must be non-negative");
    }
  });
  problems.guard("cost_mode", [&] {
    if (doc.contains("cost_mode")) c.cost_mode = parse_cost_mode(doc.at("cost_mode").get<std::string>());
  });
  problems.guard("seed", [&] {
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
  });
  problems.guard("trials", [&] {
    if (doc.contains("trials")) c.trials = doc.at("trials").get<int>();
    if (c.trials < 1) throw ConfigError("must be at least 1");
  });
  problems.guard("workers", [&] {
    if (doc.contains("workers")) c.workers = doc.at("workers").get<int>();
    if (c.workers < 1) throw ConfigError("must be at least 1");
  });
  problems.guard("output_dir", [&] {
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
    if (c.output_dir.empty()) throw ConfigError("must not be empty");
  });
  problems.guard("label", [&] {
    if (doc.contains("label")) c.label = doc.at("label").get<std::string>();
  });
  problems.guard("model_dims", [&] {
    if (!doc.contains("model_dims")) return;
    const auto& m = doc.at("model_dims");
    ModelDims dims{m.at("hidden").get<std::int64_t>(), m.at("heads").get<std::int64_t>(),
                   m.at("total_params").get<std::int64_t>()};
    per_head_parameters(dims);
    if (dims.total_params < 1) throw ConfigError("total_params must be positive");
    c.model_dims = dims;
  });

  if (!doc.contains("oracle")) {
    problems.add("oracle: is required");
  } else {
    c.oracle_json = doc.at("oracle");
    c.oracle = parse_oracle(doc.at("oracle"), c.geometry, problems);
    if (problems.empty()) {
      const auto g = oracle_geometry(c.oracle);
      if (g && c.geometry && *g != *c.geometry) {
        problems.add("geometry: does not match the oracle's weight matrix");
      }
      if (g && !c.geometry) c.geometry = g;
    }
  }

  if (!problems.empty()) problems.raise();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

nlohmann::json config_to_json(const RunConfig& c) {
  json j;
  j["strategy"] = to_string(c.strategy);
  if (c.geometry) j["geometry"] = *c.geometry;
  j["budget"] = c.budget == kUnbounded ? json(nullptr) : json(c.budget);
  j["cost_mode"] = to_string(c.cost_mode);
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  j["label"] = c.label;
  if (c.model_dims) {
    j["model_dims"] = {{"hidden", c.model_dims->hidden},
                       {"heads", c.model_dims->heads},
                       {"total_params", c.model_dims->total_params}};
  }
  j["oracle"] = c.oracle_json;
  return j;
}

std::shared_ptr<AccuracyOracle> make_oracle(const OracleConfig& config) {
  return std::visit(
      [](const auto& cfg) -> std::shared_ptr<AccuracyOracle> {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, AdditiveOracleConfig>) {
          return std::make_shared<AdditiveOracle>(cfg.spec);
        } else if constexpr (std::is_same_v<T, SupermodularOracleConfig>) {
          return std::make_shared<SupermodularOracle>(cfg.spec);
        } else if constexpr (std::is_same_v<T, TableOracleConfig>) {
          return std::make_shared<TableOracle>(load_table(cfg.path));
        } else {
          return ExternalOracle::spawn(cfg.command);
        }
      },
      config);
}

}  // namespace headprune
