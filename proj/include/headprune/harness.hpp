#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "headprune/baselines.hpp"
#include "headprune/pruning.hpp"

namespace headprune {

// ---------------------------------------------------------------------------
// Configuration

struct AdditiveOracleConfig {
  AdditiveOracleSpec spec;
};
struct SupermodularOracleConfig {
  SupermodularOracleSpec spec;
};
struct TableOracleConfig {
  std::string path;
};
struct ExternalOracleConfig {
  std::string command;
};

using OracleConfig = std::variant<AdditiveOracleConfig, SupermodularOracleConfig,
                                  TableOracleConfig, ExternalOracleConfig>;

struct ModelDims {
  std::int64_t hidden = 0;        // d
  std::int64_t heads = 0;         // n, heads per layer
  std::int64_t total_params = 0;  // whole model
};

struct RunConfig {
  Strategy strategy = Strategy::kAStar;
  std::optional<Geometry> geometry;  // must agree with the oracle when given
  double budget = 0.0;               // kUnbounded when the JSON value is null
  CostMode cost_mode = CostMode::kIncremental;
  std::uint64_t seed = 0;
  int trials = 100;
  int workers = 1;
  std::string output_dir = "run";
  std::string label;
  std::optional<ModelDims> model_dims;
  OracleConfig oracle;
  nlohmann::json oracle_json;  // the oracle section as written, for hashing
};

/// Parses and validates a config document. Collects every problem into one
/// ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& config);

/// Instantiates the configured oracle (spawning the evaluator process for
/// external oracles).
std::shared_ptr<AccuracyOracle> make_oracle(const OracleConfig& config);

// ---------------------------------------------------------------------------
// Summaries

struct ZeroBudgetSummary {
  int heads_at_zero = 0;
  double accuracy_at_zero = 0.0;
  double compression_at_zero = 0.0;  // percent of all heads
};

/// Longest prefix of the prune list whose cumulative charge is zero.
ZeroBudgetSummary zero_budget_summary(const PruneSolution& solution);

/// Attention parameters owned by one head: Q/K/V/O weight slices plus Q/K/V
/// bias slices. Throws ConfigError if hidden is not a multiple of heads.
std::int64_t per_head_parameters(const ModelDims& dims);
std::int64_t param_reduction(const ModelDims& dims, std::int64_t pruned_count);

// ---------------------------------------------------------------------------
// Serialization

nlohmann::ordered_json solution_to_json(const PruneSolution& solution);
PruneSolution solution_from_json(const nlohmann::json& j);

nlohmann::ordered_json distribution_to_json(const DistributionSummary& summary);
DistributionSummary distribution_from_json(const nlohmann::json& j);

/// Shortest round-trip decimal representation.
std::string format_number(double value);

std::string mask_matrix_csv(const PruneSolution& solution);
std::string sorted_cost_csv(const PruneSolution& solution);
std::string trace_csv(const PruneSolution& solution);
std::string trials_csv(const DistributionSummary& summary);
std::string histogram_csv(const DistributionSummary& summary);

struct FigureFiles {
  std::filesystem::path mask_matrix;
  std::filesystem::path cost_matrix;
  std::filesystem::path trace;
};

FigureFiles export_figure_data(const PruneSolution& solution, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Orchestration

struct RunArtifacts {
  std::filesystem::path report;
  std::filesystem::path manifest;
  std::filesystem::path metadata;
  std::optional<FigureFiles> figures;             // non-random strategies
  std::optional<std::filesystem::path> trials;    // random only
  std::optional<std::filesystem::path> histogram; // random only
  std::optional<std::filesystem::path> table;     // when recording
};

struct RunOptions {
  std::optional<std::string> record_table;  // write every computed evaluation here
  std::optional<std::string> replay_table;  // replace the oracle with this table
};

/// Runs one configured experiment and writes its artifacts to
/// config.output_dir. On oracle failure a partial report is written before
/// the error propagates.
RunArtifacts run(const RunConfig& config, const RunOptions& options = {});

/// Table-style CSV assembled from the manifests in `run_dirs`.
std::string summarize(const std::vector<std::filesystem::path>& run_dirs);

std::uint64_t fnv1a64(const std::string& bytes) noexcept;

}  // namespace headprune
