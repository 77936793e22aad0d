#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "headprune/pruning.hpp"

namespace headprune {

/// Greedy one-head-at-a-time pruning that re-evaluates every unpruned head
/// each round. Same clamping, tie-break and ledger rules as astar_prune.
PruneSolution local_prune(Evaluator& evaluator, const SearchOptions& options);

/// Prunes whole head columns {(i, j) : all layers i}, cheapest column first,
/// charging each column's clamped cost as one ledger entry.
PruneSolution global_prune(Evaluator& evaluator, const SearchOptions& options);

struct TrialResult {
  std::uint64_t seed = 0;
  int pruned_count = 0;
  double budget_used = 0.0;  // max(0, baseline - final_accuracy)
  double final_accuracy = 0.0;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Uniform random permutation of `items` driven by mt19937_64(seed). The
/// bounded draw is implemented here so the order does not depend on the
/// standard library's distribution algorithms.
std::vector<HeadIndex> seeded_permutation(std::vector<HeadIndex> items, std::uint64_t seed);

/// Prunes heads in a seeded random order and stops just before the first
/// head that would push the total drop beyond `budget`.
TrialResult random_trial(Evaluator& evaluator, double budget, std::uint64_t seed);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  int count = 0;

  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

struct DistributionSummary {
  int trials = 0;
  double budget = 0.0;
  std::map<int, int> pruned_histogram;  // pruned_count -> trials
  int min_pruned = 0;
  double median_pruned = 0.0;
  int max_pruned = 0;
  int p95_pruned = 0;  // nearest-rank 95th percentile
  std::vector<HistogramBin> budget_histogram;
  std::vector<TrialResult> results;  // in seed order

  friend bool operator==(const DistributionSummary&, const DistributionSummary&) = default;
};

inline constexpr int kBudgetHistogramBins = 20;

/// Runs `trials` random trials with seeds base_seed, base_seed+1, ...
/// Trials may run on `workers` threads; the summary does not depend on it.
DistributionSummary random_experiment(Evaluator& evaluator, double budget, int trials,
                                      std::uint64_t base_seed, int workers = 1);

/// Order statistics and histograms over already-computed trial results.
DistributionSummary summarize_trials(std::vector<TrialResult> results, double budget);

}  // namespace headprune
