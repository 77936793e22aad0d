#include "headprune/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "greedy.hpp"

namespace headprune {
namespace {

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  // Rejection sampling over the largest multiple of `bound`.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

}  // namespace

PruneSolution local_prune(Evaluator& evaluator, const SearchOptions& options) {
  return detail::greedy_prune(evaluator, options, Strategy::kLocal, /*eliminate=*/false);
}

PruneSolution global_prune(Evaluator& evaluator, const SearchOptions& options) {
  PruneSolution solution = detail::start_solution(evaluator, options, Strategy::kGlobal);
  auto& ledger = solution.ledger;
  const Geometry g = solution.geometry;
  std::vector<int> live_columns(static_cast<std::size_t>(g.heads_per_layer));
  for (int j = 0; j < g.heads_per_layer; ++j) live_columns[static_cast<std::size_t>(j)] = j;

  auto column = [&g](int j) {
    std::vector<HeadIndex> heads;
    for (int i = 0; i < g.layers; ++i) heads.push_back({i, j});
    return heads;
  };

  PruneMask pruned;
  try {
    int iteration = 0;
    solution.stop_reason = "budget_exhausted";
    while (ledger.remaining() > 0.0 && !live_columns.empty()) {
      ++iteration;
      const double reference =
          evaluator.evaluate(options.mode == CostMode::kIncremental ? pruned : PruneMask{});
      std::vector<CostEntry> costs;
      for (int j : live_columns) {
        const double p = evaluator.evaluate(with_heads(pruned, column(j)));
        costs.push_back({{kWholeColumn, j}, p, reference - p});
      }
      const auto evaluations = std::ssize(live_columns);
      solution.candidate_evaluations += evaluations;

      const Victim victim = select_victim(costs);
      if (!(victim.clamped_cost < ledger.remaining())) {
        solution.terminal = TerminalProbe{iteration, evaluations, std::move(costs)};
        solution.stop_reason = "cost_exceeds_budget";
        break;
      }

      const auto heads = column(victim.head.head);
      pruned = with_heads(pruned, heads);
      ledger.charge(victim.clamped_cost);
      for (const auto& h : heads) {
        solution.pruned.push_back({h, iteration, victim.raw_cost, victim.clamped_cost});
      }
      std::erase(live_columns, victim.head.head);

      TraceRow row;
      row.iteration = iteration;
      row.pruned = heads;
      row.raw_cost = victim.raw_cost;
      row.clamped_cost = victim.clamped_cost;
      row.accuracy_after = evaluator.evaluate(pruned);
      row.charged_cumulative = ledger.charged();
      row.live_count = static_cast<int>(live_columns.size()) * g.layers;
      row.evaluations = evaluations;
      row.costs = std::move(costs);
      solution.trace.push_back(std::move(row));
    }
    if (live_columns.empty()) solution.stop_reason = "search_space_empty";
  } catch (const OracleError& e) {
    detail::finish_solution(solution, evaluator);
    solution.stop_reason = "oracle_failure";
    throw SearchAborted(e.what(), std::move(solution));
  }
  detail::finish_solution(solution, evaluator);
  return solution;
}

std::vector<HeadIndex> seeded_permutation(std::vector<HeadIndex> items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded_draw(rng, i));
    std::swap(items[i - 1], items[j]);
  }
  return items;
}

TrialResult random_trial(Evaluator& evaluator, double budget, std::uint64_t seed) {
  if (std::isnan(budget) || budget < 0.0) throw ConfigError("budget must be non-negative");
  const double baseline = evaluator.baseline();
  TrialResult result{seed, 0, 0.0, baseline};
  PruneMask pruned;
  for (const auto& h : seeded_permutation(all_heads(evaluator.geometry()), seed)) {
    auto next = with_head(pruned, h);
    const double acc = evaluator.evaluate(next);
    if (baseline - acc > budget) break;
    pruned = std::move(next);
    result.pruned_count += 1;
    result.final_accuracy = acc;
  }
  result.budget_used = std::max(0.0, baseline - result.final_accuracy);
  return result;
}

DistributionSummary summarize_trials(std::vector<TrialResult> results, double budget) {
  if (results.empty()) throw ConfigError("trials must be at least 1");
  DistributionSummary s;
  s.trials = static_cast<int>(results.size());
  s.budget = budget;

  std::vector<int> counts;
  for (const auto& r : results) {
    counts.push_back(r.pruned_count);
    s.pruned_histogram[r.pruned_count] += 1;
  }
  std::sort(counts.begin(), counts.end());
  const auto n = counts.size();
  s.min_pruned = counts.front();
  s.max_pruned = counts.back();
  s.median_pruned = n % 2 == 1 ? counts[n / 2] : 0.5 * (counts[n / 2 - 1] + counts[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95_pruned = counts[std::max<std::size_t>(rank, 1) - 1];

  double top = budget;
  if (!std::isfinite(top) || top <= 0.0) {
    top = 0.0;
    for (const auto& r : results) top = std::max(top, r.budget_used);
  }
  if (top <= 0.0) {
    s.budget_histogram.push_back({0.0, 0.0, s.trials});
  } else {
    const double width = top / kBudgetHistogramBins;
    for (int b = 0; b < kBudgetHistogramBins; ++b) {
      s.budget_histogram.push_back({b * width, (b + 1) * width, 0});
    }
    for (const auto& r : results) {
      auto b = static_cast<int>(r.budget_used / width);
      b = std::clamp(b, 0, kBudgetHistogramBins - 1);
      s.budget_histogram[static_cast<std::size_t>(b)].count += 1;
    }
  }
  s.results = std::move(results);
  return s;
}

DistributionSummary random_experiment(Evaluator& evaluator, double budget, int trials,
                                      std::uint64_t base_seed, int workers) {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  std::vector<TrialResult> results(static_cast<std::size_t>(trials));
  const auto n_workers = static_cast<std::size_t>(std::clamp(workers, 1, trials));
  if (n_workers == 1) {
    for (int t = 0; t < trials; ++t) {
      results[static_cast<std::size_t>(t)] =
          random_trial(evaluator, budget, base_seed + static_cast<std::uint64_t>(t));
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(n_workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (int t = next++; t < trials; t = next++) {
              results[static_cast<std::size_t>(t)] =
                  random_trial(evaluator, budget, base_seed + static_cast<std::uint64_t>(t));
            }
          } catch (...) {
            errors[w] = std::current_exception();
            next = trials;
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return summarize_trials(std::move(results), budget);
}

}  // namespace headprune
