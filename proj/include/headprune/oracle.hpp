#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "headprune/head_space.hpp"

namespace headprune {

/// What an oracle reports about the model it stands for.
struct OracleInfo {
  Geometry geometry;
  double baseline_accuracy = 0.0;  // percent, evaluate(empty mask)
};

/// Throws OracleError if the baseline lies outside [0, 100].
void validate(const OracleInfo& info);

using WeightMatrix = std::vector<std::vector<double>>;

/// Geometry of a rectangular, non-empty weight matrix. Throws ConfigError
/// on ragged or empty input.
Geometry weight_geometry(const WeightMatrix& weights);

/// Maps a canonical, in-bounds mask to accuracy in percent.
///
/// Implementations do no caching; wrap them in an Evaluator.
class AccuracyOracle {
 public:
  virtual ~AccuracyOracle() = default;

  virtual const OracleInfo& info() const noexcept = 0;
  virtual double accuracy(const PruneMask& mask) = 0;

  /// Whether accuracy() may be called from several threads at once.
  virtual bool concurrent() const noexcept { return true; }
};

struct AdditiveOracleSpec {
  double baseline = 0.0;
  WeightMatrix weights;  // per-head accuracy drop, may be negative
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// accuracy(S) = baseline - sum_{h in S} w_h - noise(S), where noise is a
/// pure function of (seed, S) and zero for the empty mask.
class AdditiveOracle final : public AccuracyOracle {
 public:
  explicit AdditiveOracle(AdditiveOracleSpec spec);

  const OracleInfo& info() const noexcept override { return info_; }
  double accuracy(const PruneMask& mask) override;

  const AdditiveOracleSpec& spec() const noexcept { return spec_; }

 private:
  AdditiveOracleSpec spec_;
  OracleInfo info_;
};

/// Standard normal deviate keyed by (seed, mask). Exposed for tests.
double mask_noise(std::uint64_t seed, const PruneMask& mask);

struct SupermodularOracleSpec {
  double baseline = 0.0;
  WeightMatrix weights;  // non-negative
  double growth = 0.0;   // beta, percentage points per pruned pair
};

/// accuracy(S) = baseline - sum_{h in S} w_h - growth * |S|(|S|-1)/2.
/// The marginal cost of one more head grows with |S|.
class SupermodularOracle final : public AccuracyOracle {
 public:
  explicit SupermodularOracle(SupermodularOracleSpec spec);

  const OracleInfo& info() const noexcept override { return info_; }
  double accuracy(const PruneMask& mask) override;

 private:
  SupermodularOracleSpec spec_;
  OracleInfo info_;
};

struct TableOracleSpec {
  double baseline = 0.0;
  Geometry geometry;
  std::unordered_map<PruneMask, double, PruneMaskHash> entries;
};

/// Replays recorded evaluations. A mask that was never recorded is an
/// OracleError; the empty mask falls back to the baseline.
class TableOracle final : public AccuracyOracle {
 public:
  explicit TableOracle(TableOracleSpec spec);

  const OracleInfo& info() const noexcept override { return info_; }
  double accuracy(const PruneMask& mask) override;

 private:
  TableOracleSpec spec_;
  OracleInfo info_;
};

TableOracleSpec table_from_json(const nlohmann::json& j);
/// Entries sorted by (size, canonical heads) so output is deterministic.
nlohmann::json table_to_json(const TableOracleSpec& table);
TableOracleSpec load_table(const std::string& path);
void save_table(const TableOracleSpec& table, const std::string& path);

struct EvalCounter {
  std::uint64_t requested = 0;  // every evaluate() call
  std::uint64_t computed = 0;   // distinct masks sent to the oracle

  friend bool operator==(const EvalCounter&, const EvalCounter&) = default;
};

/// Memoizing front end to an oracle. Thread-safe; concurrent inserts of
/// the same key are harmless because values per key are identical.
class Evaluator {
 public:
  explicit Evaluator(std::shared_ptr<AccuracyOracle> oracle);

  const OracleInfo& info() const noexcept { return oracle_->info(); }
  const Geometry& geometry() const noexcept { return oracle_->info().geometry; }
  double baseline() const noexcept { return oracle_->info().baseline_accuracy; }

  /// Canonicalizes `mask` (throwing BoundsError when out of range) and
  /// returns its accuracy, consulting the cache first.
  double evaluate(const PruneMask& mask);

  EvalCounter counter() const noexcept;

  /// Every computed evaluation, as a replayable table.
  TableOracleSpec recorded_table() const;

 private:
  std::shared_ptr<AccuracyOracle> oracle_;
  mutable std::mutex cache_mutex_;
  std::mutex oracle_mutex_;
  std::unordered_map<PruneMask, double, PruneMaskHash> cache_;
  std::atomic<std::uint64_t> requested_{0};
  std::uint64_t computed_ = 0;  // guarded by cache_mutex_
};

/// Synthetic weights for experiments: exactly `nonpositive_count` heads get
/// small non-positive drops (pruning them is free or helps), the rest get
/// log-normally distributed positive drops.
struct HeavyTailedWeights {
  int nonpositive_count = 0;
  double negative_scale = 0.08;  // non-positive weights drawn from [-scale, 0]
  double log_median = -1.2;      // log of the median positive weight
  double log_sigma = 1.0;
  std::uint64_t seed = 0;
};

WeightMatrix generate_weights(const Geometry& geometry, const HeavyTailedWeights& params);

}  // namespace headprune
