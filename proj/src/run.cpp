#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "headprune/errors.hpp"
#include "headprune/harness.hpp"

namespace headprune {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json manifest_base(const RunConfig& config, const Evaluator& evaluator,
                           const RunOptions& options) {
  ordered_json m;
  m["label"] = config.label;
  m["strategy"] = to_string(config.strategy);
  auto hashed = config_to_json(config);
  hashed.erase("output_dir");
  m["config_hash"] = hex64(fnv1a64(hashed.dump()));
  m["oracle_hash"] = hex64(fnv1a64(options.replay_table ? "table:" + *options.replay_table
                                                        : config.oracle_json.dump()));
  m["geometry"] = json(evaluator.geometry());
  m["cost_mode"] = to_string(config.cost_mode);
  m["baseline_accuracy"] = evaluator.baseline();
  return m;
}

ordered_json solution_manifest(const RunConfig& config, const PruneSolution& s) {
  ordered_json m;
  const double total = s.geometry.total_heads();
  m["budget"] = {{"given", number_or_null(s.ledger.given())},
                 {"used", s.ledger.charged()},
                 {"remaining", number_or_null(s.ledger.remaining())}};
  const auto zero = zero_budget_summary(s);
  m["zero_budget"] = {{"heads", zero.heads_at_zero},
                      {"compression", zero.compression_at_zero},
                      {"accuracy", zero.accuracy_at_zero}};
  m["with_budget"] = {{"heads", s.pruned.size()},
                      {"compression", 100.0 * static_cast<double>(s.pruned.size()) / total},
                      {"accuracy", s.final_accuracy}};
  m["evaluations"] = {{"candidate", s.candidate_evaluations},
                      {"requested", s.counter.requested},
                      {"computed", s.counter.computed}};
  if (config.model_dims) {
    m["parameters"] = {
        {"per_head", per_head_parameters(*config.model_dims)},
        {"total", config.model_dims->total_params},
        {"remaining", param_reduction(*config.model_dims,
                                      static_cast<std::int64_t>(s.pruned.size()))}};
  }
  m["stop_reason"] = s.stop_reason;
  return m;
}

PruneSolution dispatch(Strategy strategy, Evaluator& evaluator, const SearchOptions& options) {
  switch (strategy) {
    case Strategy::kAStar: return astar_prune(evaluator, options);
    case Strategy::kLocal: return local_prune(evaluator, options);
    case Strategy::kGlobal: return global_prune(evaluator, options);
    case Strategy::kRandom: break;
  }
  throw InvariantError("dispatch called for random strategy");
}

}  // namespace

RunArtifacts run(const RunConfig& config, const RunOptions& options) {
  std::shared_ptr<AccuracyOracle> oracle =
      options.replay_table ? std::make_shared<TableOracle>(load_table(*options.replay_table))
                           : make_oracle(config.oracle);
  Evaluator evaluator(oracle);
  if (config.geometry && *config.geometry != evaluator.geometry()) {
    throw ConfigError("geometry: config says " + std::to_string(config.geometry->layers) + "x" +
                      std::to_string(config.geometry->heads_per_layer) + " but the oracle reports " +
                      std::to_string(evaluator.geometry().layers) + "x" +
                      std::to_string(evaluator.geometry().heads_per_layer));
  }

  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  RunArtifacts artifacts;
  artifacts.report = dir / "report.json";
  artifacts.manifest = dir / "manifest.json";
  artifacts.metadata = dir / "metadata.json";

  ordered_json manifest = manifest_base(config, evaluator, options);

  if (config.strategy == Strategy::kRandom) {
    const auto summary =
        random_experiment(evaluator, config.budget, config.trials, config.seed, config.workers);
    const auto counter = evaluator.counter();
    ordered_json report;
    report["strategy"] = "random";
    report["geometry"] = json(evaluator.geometry());
    report["baseline_accuracy"] = evaluator.baseline();
    report["base_seed"] = config.seed;
    report["distribution"] = distribution_to_json(summary);
    report["evaluations"] = {{"requested", counter.requested}, {"computed", counter.computed}};
    write_json(artifacts.report, report);

    artifacts.trials = dir / "distribution.csv";
    artifacts.histogram = dir / "histogram.csv";
    write_text(*artifacts.trials, trials_csv(summary));
    write_text(*artifacts.histogram, histogram_csv(summary));

    manifest["budget"] = {{"given", number_or_null(config.budget)}};
    manifest["random"] = {{"trials", summary.trials},
                          {"min", summary.min_pruned},
                          {"median", summary.median_pruned},
                          {"p95", summary.p95_pruned},
                          {"max", summary.max_pruned}};
    manifest["evaluations"] = {{"requested", counter.requested}, {"computed", counter.computed}};
  } else {
    const SearchOptions search{config.budget, config.cost_mode, config.workers};
    PruneSolution solution;
    try {
      solution = dispatch(config.strategy, evaluator, search);
    } catch (const SearchAborted& e) {
      auto partial = solution_to_json(e.partial());
      partial["error"] = e.what();
      write_json(dir / "report.partial.json", partial);
      throw;
    }
    write_json(artifacts.report, solution_to_json(solution));
    artifacts.figures = export_figure_data(solution, dir);
    const auto extra = solution_manifest(config, solution);
    for (auto& [key, value] : extra.items()) manifest[key] = value;
  }

  if (options.record_table) {
    save_table(evaluator.recorded_table(), *options.record_table);
    artifacts.table = fs::path(*options.record_table);
  }

  write_json(artifacts.manifest, manifest);
  ordered_json metadata;
  metadata["created_utc"] = utc_now();
  metadata["tool"] = "headprune";
  write_json(artifacts.metadata, metadata);
  return artifacts;
}

std::string summarize(const std::vector<fs::path>& run_dirs) {
  std::ostringstream out;
  out << "label,strategy,budget_given,budget_used,budget_remaining,zero_heads,zero_compression,"
         "zero_accuracy,heads,compression,accuracy,searches,requested\n";
  auto num = [](const json& j) { return j.is_null() ? std::string("inf") : format_number(j.get<double>()); };
  for (const auto& dir : run_dirs) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ConfigError("no manifest.json in '" + dir.string() + "'");
    json m;
    try {
      in >> m;
    } catch (const json::exception& e) {
      throw ConfigError("manifest in '" + dir.string() + "' is not valid JSON: " + e.what());
    }
    out << m.value("label", "") << ',' << m.at("strategy").get<std::string>() << ','
        << num(m.at("budget").at("given")) << ',';
    if (m.contains("with_budget")) {
      const auto& z = m.at("zero_budget");
      const auto& w = m.at("with_budget");
      out << num(m.at("budget").at("used")) << ',' << num(m.at("budget").at("remaining")) << ','
          << z.at("heads").get<int>() << ',' << num(z.at("compression")) << ','
          << num(z.at("accuracy")) << ',' << w.at("heads").get<int>() << ','
          << num(w.at("compression")) << ',' << num(w.at("accuracy")) << ','
          << m.at("evaluations").at("computed").get<std::uint64_t>() << ','
          << m.at("evaluations").at("requested").get<std::uint64_t>() << '\n';
    } else {
      const auto& r = m.at("random");
      out << ",,,,," << num(r.at("median")) << ",,,"
          << m.at("evaluations").at("computed").get<std::uint64_t>() << ','
          << m.at("evaluations").at("requested").get<std::uint64_t>() << '\n';
    }
  }
  return out.str();
}

}  // namespace headprune
