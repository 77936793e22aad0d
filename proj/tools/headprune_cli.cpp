// Command-line front end: prune, record-table, replay, summarize.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "headprune/errors.hpp"
#include "headprune/harness.hpp"

namespace {

using headprune::ExitCode;
using nlohmann::json;

struct Overrides {
  std::string config_path;
  std::optional<double> budget;
  bool unbounded = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> trials;
  std::optional<std::string> out;
  std::optional<std::string> cost_mode;
  std::string strategy;
};

void add_run_flags(CLI::App* cmd, Overrides& o, bool strategy_required) {
  auto* s = cmd->add_option("strategy", o.strategy, "astar | local | global | random")
                ->check(CLI::IsMember({"astar", "local", "global", "random"}));
  if (strategy_required) s->required();
  cmd->add_option("--config", o.config_path, "run config (JSON)")->required();
  cmd->add_option("--budget", o.budget, "accuracy budget in percentage points");
  cmd->add_flag("--unbounded", o.unbounded, "run without a budget limit");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--workers", o.workers, "parallel evaluation workers");
  cmd->add_option("--trials", o.trials, "random pruning trials");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--cost-mode", o.cost_mode, "incremental | baseline");
}

headprune::RunConfig resolve(const Overrides& o) {
  std::ifstream in(o.config_path);
  if (!in) throw headprune::ConfigError("cannot open config file '" + o.config_path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw headprune::ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw headprune::ConfigError("config must be a JSON object");
  // flags > file > defaults
  if (!o.strategy.empty()) doc["strategy"] = o.strategy;
  if (o.budget) doc["budget"] = *o.budget;
  if (o.unbounded) doc["budget"] = nullptr;
  if (o.seed) doc["seed"] = *o.seed;
  if (o.workers) doc["workers"] = *o.workers;
  if (o.trials) doc["trials"] = *o.trials;
  if (o.out) doc["output_dir"] = *o.out;
  if (o.cost_mode) doc["cost_mode"] = *o.cost_mode;
  return headprune::parse_run_config(doc);
}

void print_run(const headprune::RunArtifacts& a) {
  std::cout << "report: " << a.report.string() << '\n';
  if (a.figures) {
    std::cout << "trace: " << a.figures->trace.string() << '\n'
              << "mask matrix: " << a.figures->mask_matrix.string() << '\n'
              << "cost matrix: " << a.figures->cost_matrix.string() << '\n';
  }
  if (a.trials) std::cout << "distribution: " << a.trials->string() << '\n';
  if (a.table) std::cout << "table: " << a.table->string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-constrained attention head pruning"};
  app.require_subcommand(1);

  Overrides prune_opts;
  auto* prune = app.add_subcommand("prune", "run a pruning strategy");
  add_run_flags(prune, prune_opts, true);

  Overrides record_opts;
  std::string record_path;
  auto* record = app.add_subcommand("record-table", "run and dump every evaluation as a table oracle");
  add_run_flags(record, record_opts, false);
  record->add_option("--table", record_path, "table file to write")->required();

  Overrides replay_opts;
  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "rerun against a recorded table oracle");
  add_run_flags(replay, replay_opts, false);
  replay->add_option("--table", replay_path, "recorded table file")->required();

  std::vector<std::string> summary_dirs;
  std::optional<std::string> summary_out;
  auto* summary = app.add_subcommand("summarize", "table-style CSV across run directories");
  summary->add_option("dirs", summary_dirs, "run directories")->required();
  summary->add_option("--out", summary_out, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfigError);
  }

  try {
    if (*prune) {
      print_run(headprune::run(resolve(prune_opts)));
    } else if (*record) {
      print_run(headprune::run(resolve(record_opts), {.record_table = record_path}));
    } else if (*replay) {
      print_run(headprune::run(resolve(replay_opts), {.replay_table = replay_path}));
    } else if (*summary) {
      std::vector<std::filesystem::path> dirs(summary_dirs.begin(), summary_dirs.end());
      const auto csv = headprune::summarize(dirs);
      if (summary_out) {
        std::ofstream(*summary_out) << csv;
      } else {
        std::cout << csv;
      }
    }
  } catch (const headprune::ConfigError& e) {
    for (const auto& p : e.problems()) std::cerr << "config error: " << p << '\n';
    return static_cast<int>(ExitCode::kConfigError);
  } catch (const headprune::BoundsError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfigError);
  } catch (const headprune::OracleError& e) {
    std::cerr << "oracle failure: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kOracleFailure);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfigError);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kInvariantViolation);
  }
  return 0;
}
