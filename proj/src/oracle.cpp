#include "headprune/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "headprune/errors.hpp"

namespace headprune {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in (0, 1], never zero so log() is finite.
double unit_open(std::uint64_t& state) {
  return (static_cast<double>(splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
}

double sum_weights(const WeightMatrix& w, const PruneMask& mask) {
  double total = 0.0;
  for (const auto& h : mask.heads) total += w[h.layer][h.head];
  return total;
}

void check_percent(double value, const std::string& what) {
  if (!std::isfinite(value) || value < 0.0 || value > 100.0) {
    throw ConfigError(what + " must be a percent in [0, 100], got " + std::to_string(value));
  }
}

}  // namespace

void validate(const OracleInfo& info) {
  if (info.geometry.layers < 1 || info.geometry.heads_per_layer < 1) {
    throw OracleError("oracle geometry must have at least one layer and one head");
  }
  if (!std::isfinite(info.baseline_accuracy) || info.baseline_accuracy < 0.0 ||
      info.baseline_accuracy > 100.0) {
    throw OracleError("oracle baseline must be a percent in [0, 100], got " +
                      std::to_string(info.baseline_accuracy));
  }
}

Geometry weight_geometry(const WeightMatrix& weights) {
  if (weights.empty() || weights.front().empty()) {
    throw ConfigError("weight matrix must be non-empty");
  }
  const auto cols = weights.front().size();
  for (const auto& row : weights) {
    if (row.size() != cols) throw ConfigError("weight matrix rows must have equal length");
    for (double w : row) {
      if (!std::isfinite(w)) throw ConfigError("weight matrix entries must be finite");
    }
  }
  return Geometry(static_cast<int>(weights.size()), static_cast<int>(cols));
}

double mask_noise(std::uint64_t seed, const PruneMask& mask) {
  std::uint64_t state = seed ^ mask_hash(mask);
  const double u1 = unit_open(state);
  const double u2 = unit_open(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

AdditiveOracle::AdditiveOracle(AdditiveOracleSpec spec) : spec_(std::move(spec)) {
  check_percent(spec_.baseline, "additive oracle baseline");
  if (!(spec_.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  info_ = {weight_geometry(spec_.weights), spec_.baseline};
}

double AdditiveOracle::accuracy(const PruneMask& mask) {
  if (mask.empty()) return spec_.baseline;
  double acc = spec_.baseline - sum_weights(spec_.weights, mask);
  if (spec_.noise_sigma > 0.0) acc -= spec_.noise_sigma * mask_noise(spec_.seed, mask);
  return acc;
}

SupermodularOracle::SupermodularOracle(SupermodularOracleSpec spec) : spec_(std::move(spec)) {
  check_percent(spec_.baseline, "supermodular oracle baseline");
  if (!(spec_.growth >= 0.0)) throw ConfigError("supermodular growth must be non-negative");
  info_ = {weight_geometry(spec_.weights), spec_.baseline};
  for (const auto& row : spec_.weights) {
    for (double w : row) {
      if (w < 0.0) throw ConfigError("supermodular weights must be non-negative");
    }
  }
}

double SupermodularOracle::accuracy(const PruneMask& mask) {
  if (mask.empty()) return spec_.baseline;
  const auto n = static_cast<double>(mask.size());
  return spec_.baseline - sum_weights(spec_.weights, mask) - spec_.growth * n * (n - 1.0) / 2.0;
}

TableOracle::TableOracle(TableOracleSpec spec) : spec_(std::move(spec)) {
  check_percent(spec_.baseline, "table baseline");
  info_ = {spec_.geometry, spec_.baseline};
  for (const auto& [mask, acc] : spec_.entries) {
    if (mask.empty() && acc != spec_.baseline) {
      throw ConfigError("table entry for the empty mask disagrees with the baseline");
    }
  }
}

double TableOracle::accuracy(const PruneMask& mask) {
  if (auto it = spec_.entries.find(mask); it != spec_.entries.end()) return it->second;
  if (mask.empty()) return spec_.baseline;
  throw OracleError("table oracle has no entry for mask " + nlohmann::json(mask).dump());
}

TableOracleSpec table_from_json(const nlohmann::json& j) {
  std::vector<std::string> problems;
  if (!j.is_object()) throw ConfigError("table file must be a JSON object");
  for (const char* key : {"baseline", "geometry", "entries"}) {
    if (!j.contains(key)) problems.push_back(std::string("table: missing field '") + key + "'");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));

  TableOracleSpec table;
  table.baseline = j.at("baseline").get<double>();
  table.geometry = j.at("geometry").get<Geometry>();
  for (const auto& e : j.at("entries")) {
    auto mask = canonicalize(e.at("mask").get<PruneMask>(), table.geometry);
    table.entries[std::move(mask)] = e.at("accuracy").get<double>();
  }
  return table;
}

nlohmann::json table_to_json(const TableOracleSpec& table) {
  std::vector<std::pair<PruneMask, double>> sorted(table.entries.begin(), table.entries.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
    return a.first.heads < b.first.heads;
  });
  nlohmann::ordered_json out;
  out["baseline"] = table.baseline;
  out["geometry"] = nlohmann::json(table.geometry);
  auto entries = nlohmann::ordered_json::array();
  for (const auto& [mask, acc] : sorted) {
    nlohmann::ordered_json e;
    e["mask"] = nlohmann::json(mask);
    e["accuracy"] = acc;
    entries.push_back(std::move(e));
  }
  out["entries"] = std::move(entries);
  return nlohmann::json::parse(out.dump());
}

TableOracleSpec load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("table file '" + path + "' is not valid JSON: " + e.what());
  }
  return table_from_json(j);
}

void save_table(const TableOracleSpec& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write table file '" + path + "'");
  // Keys in the documented order: baseline, geometry, entries.
  const auto sorted = table_to_json(table);
  nlohmann::ordered_json doc;
  doc["baseline"] = sorted.at("baseline");
  doc["geometry"] = sorted.at("geometry");
  doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : sorted.at("entries")) {
    nlohmann::ordered_json row;
    row["mask"] = e.at("mask");
    row["accuracy"] = e.at("accuracy");
    doc["entries"].push_back(std::move(row));
  }
  out << doc.dump() << '\n';
}

Evaluator::Evaluator(std::shared_ptr<AccuracyOracle> oracle) : oracle_(std::move(oracle)) {
  if (!oracle_) throw InvariantError("Evaluator requires an oracle");
  validate(oracle_->info());
}

double Evaluator::evaluate(const PruneMask& mask) {
  ++requested_;
  PruneMask key = mask;
  const bool ready = is_canonical(key) && std::all_of(key.heads.begin(), key.heads.end(), [&](HeadIndex h) {
                       return in_bounds(h, geometry());
                     });
  if (!ready) key = canonicalize(std::move(key), geometry());
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }

  double value = 0.0;
  if (oracle_->concurrent()) {
    value = oracle_->accuracy(key);
  } else {
    std::lock_guard lock(oracle_mutex_);
    value = oracle_->accuracy(key);
  }
  if (!std::isfinite(value)) {
    throw OracleError("oracle returned a non-finite accuracy for mask " + nlohmann::json(key).dump());
  }
  if (key.empty() && value != baseline()) {
    throw OracleError("oracle returned " + std::to_string(value) +
                      " for the empty mask but reported baseline " +
                      std::to_string(baseline()));
  }

  std::lock_guard lock(cache_mutex_);
  if (cache_.emplace(std::move(key), value).second) ++computed_;
  return value;
}

EvalCounter Evaluator::counter() const noexcept {
  std::lock_guard lock(cache_mutex_);
  return {requested_.load(), computed_};
}

TableOracleSpec Evaluator::recorded_table() const {
  TableOracleSpec table;
  table.baseline = baseline();
  table.geometry = geometry();
  std::lock_guard lock(cache_mutex_);
  table.entries = cache_;
  return table;
}

WeightMatrix generate_weights(const Geometry& geometry, const HeavyTailedWeights& params) {
  const int total = geometry.total_heads();
  if (params.nonpositive_count < 0 || params.nonpositive_count > total) {
    throw ConfigError("nonpositive_count must lie in [0, total heads]");
  }
  std::mt19937_64 rng(params.seed);
  std::vector<int> order(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);

  std::uniform_real_distribution<double> negative(0.0, params.negative_scale);
  std::lognormal_distribution<double> positive(params.log_median, params.log_sigma);

  WeightMatrix w(static_cast<std::size_t>(geometry.layers),
                 std::vector<double>(static_cast<std::size_t>(geometry.heads_per_layer)));
  for (int k = 0; k < total; ++k) {
    const int flat = order[static_cast<std::size_t>(k)];
    auto& cell = w[static_cast<std::size_t>(flat / geometry.heads_per_layer)]
                  [static_cast<std::size_t>(flat % geometry.heads_per_layer)];
    if (k < params.nonpositive_count) {
      cell = -negative(rng);
    } else {
      double v = 0.0;
      while (!(v > 0.0)) v = positive(rng);
      cell = v;
    }
  }
  return w;
}

}  // namespace headprune
