#include "headprune/pruning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "greedy.hpp"

namespace headprune {

std::string to_string(CostMode mode) {
  return mode == CostMode::kIncremental ? "incremental" : "baseline";
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kAStar: return "astar";
    case Strategy::kLocal: return "local";
    case Strategy::kGlobal: return "global";
    case Strategy::kRandom: return "random";
  }
  return "unknown";
}

CostMode parse_cost_mode(const std::string& text) {
  if (text == "incremental") return CostMode::kIncremental;
  if (text == "baseline") return CostMode::kBaseline;
  throw ConfigError("cost_mode must be 'incremental' or 'baseline', got '" + text + "'");
}

Strategy parse_strategy(const std::string& text) {
  if (text == "astar") return Strategy::kAStar;
  if (text == "local") return Strategy::kLocal;
  if (text == "global") return Strategy::kGlobal;
  if (text == "random") return Strategy::kRandom;
  throw ConfigError("strategy must be one of astar, local, global, random; got '" + text + "'");
}

BudgetLedger::BudgetLedger(double given) : given_(given) {
  if (std::isnan(given) || given < 0.0) {
    throw ConfigError("budget must be non-negative, got " + std::to_string(given));
  }
}

void BudgetLedger::charge(double amount) {
  if (!(amount >= 0.0)) throw InvariantError("ledger charge must be non-negative");
  charged_ += amount;
}

PruneMask PruneSolution::mask() const {
  PruneMask m;
  m.heads = pruned_heads();
  std::sort(m.heads.begin(), m.heads.end());
  return m;
}

std::vector<HeadIndex> PruneSolution::pruned_heads() const {
  std::vector<HeadIndex> out;
  out.reserve(pruned.size());
  for (const auto& p : pruned) out.push_back(p.head);
  return out;
}

CostTable compute_costs(std::span<const HeadIndex> live, const PruneMask& pruned,
                        Evaluator& evaluator, CostMode mode, int workers) {
  CostTable table;
  table.reference_accuracy =
      evaluator.evaluate(mode == CostMode::kIncremental ? pruned : PruneMask{});
  table.entries.resize(live.size());

  auto fill = [&](std::size_t k) {
    const double p = evaluator.evaluate(with_head(pruned, live[k]));
    table.entries[k] = {live[k], p, table.reference_accuracy - p};
  };

  const auto n_workers =
      static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(workers, 1, std::ssize(live)));
  if (n_workers <= 1) {
    for (std::size_t k = 0; k < live.size(); ++k) fill(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n_workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t k = next++; k < live.size(); k = next++) fill(k);
          } catch (...) {
            errors[w] = std::current_exception();
            next = live.size();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const CostEntry& a, const CostEntry& b) { return a.head < b.head; });
  return table;
}

Victim select_victim(std::span<const CostEntry> costs) {
  if (costs.empty()) throw InvariantError("select_victim on an empty cost table");
  const auto it = std::min_element(costs.begin(), costs.end(), [](const auto& a, const auto& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.head < b.head);
  });
  return {it->head, it->cost, std::max(0.0, it->cost)};
}

void sort_by_cost(std::vector<CostEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const CostEntry& a, const CostEntry& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.head < b.head);
  });
}

std::vector<EliminationRecord> eliminate_candidates(std::span<const CostEntry> survivors_sorted,
                                                    double victim_clamped_cost,
                                                    double remaining_budget) {
  std::vector<EliminationRecord> records;
  records.reserve(survivors_sorted.size());
  double total = 0.0;
  bool cut = false;
  for (const auto& y : survivors_sorted) {
    EliminationRecord r;
    r.head = y.head;
    r.estimate = std::max(0.0, y.cost);
    r.contribution = r.estimate - victim_clamped_cost;
    if (!cut && total + r.contribution <= remaining_budget) {
      total += r.contribution;
    } else {
      cut = true;
      r.eliminated = true;
    }
    r.running_total = total;
    records.push_back(r);
  }
  return records;
}

namespace detail {

PruneSolution start_solution(const Evaluator& evaluator, const SearchOptions& options,
                             Strategy strategy) {
  PruneSolution s;
  s.strategy = strategy;
  s.geometry = evaluator.geometry();
  s.mode = options.mode;
  s.baseline_accuracy = evaluator.baseline();
  s.ledger = BudgetLedger(options.budget);
  s.final_accuracy = s.baseline_accuracy;
  return s;
}

void finish_solution(PruneSolution& solution, const Evaluator& evaluator) {
  solution.final_accuracy =
      solution.trace.empty() ? solution.baseline_accuracy : solution.trace.back().accuracy_after;
  solution.counter = evaluator.counter();
}

PruneSolution greedy_prune(Evaluator& evaluator, const SearchOptions& options, Strategy strategy,
                           bool eliminate) {
  PruneSolution solution = start_solution(evaluator, options, strategy);
  auto& ledger = solution.ledger;
  std::vector<HeadIndex> live = all_heads(solution.geometry);
  PruneMask pruned;
  const int max_iterations = solution.geometry.total_heads() + 1;

  try {
    int iteration = 0;
    solution.stop_reason = "budget_exhausted";
    while (ledger.remaining() > 0.0 && !live.empty()) {
      if (++iteration > max_iterations) {
        throw InvariantError("search exceeded " + std::to_string(max_iterations) + " iterations");
      }
      CostTable table = compute_costs(live, pruned, evaluator, options.mode, options.workers);
      table.iteration = iteration;
      const auto evaluations = std::ssize(live);
      solution.candidate_evaluations += evaluations;

      const Victim victim = select_victim(table.entries);
      if (!(victim.clamped_cost < ledger.remaining())) {
        solution.terminal = TerminalProbe{iteration, evaluations, std::move(table.entries)};
        solution.stop_reason = "cost_exceeds_budget";
        break;
      }

      pruned = with_head(pruned, victim.head);
      ledger.charge(victim.clamped_cost);
      solution.pruned.push_back({victim.head, iteration, victim.raw_cost, victim.clamped_cost});
      std::erase(live, victim.head);

      TraceRow row;
      row.iteration = iteration;
      row.pruned = {victim.head};
      row.raw_cost = victim.raw_cost;
      row.clamped_cost = victim.clamped_cost;
      row.charged_cumulative = ledger.charged();
      row.evaluations = evaluations;

      if (eliminate && !live.empty()) {
        std::vector<CostEntry> survivors;
        survivors.reserve(live.size());
        for (const auto& e : table.entries) {
          if (e.head != victim.head) survivors.push_back(e);
        }
        sort_by_cost(survivors);
        row.elimination = eliminate_candidates(survivors, victim.clamped_cost, ledger.remaining());
        for (std::size_t k = 0; k < row.elimination.size(); ++k) {
          if (!row.elimination[k].eliminated) continue;
          solution.eliminated.push_back({row.elimination[k].head, iteration, survivors[k].cost});
          std::erase(live, row.elimination[k].head);
        }
      }

      row.accuracy_after = evaluator.evaluate(pruned);
      row.live_count = static_cast<int>(live.size());
      row.costs = std::move(table.entries);
      solution.trace.push_back(std::move(row));
    }
    if (live.empty() && solution.stop_reason != "cost_exceeds_budget") {
      solution.stop_reason = "search_space_empty";
    }
  } catch (const OracleError& e) {
    finish_solution(solution, evaluator);
    solution.stop_reason = "oracle_failure";
    throw SearchAborted(e.what(), std::move(solution));
  }
  finish_solution(solution, evaluator);
  return solution;
}

}  // namespace detail

PruneSolution astar_prune(Evaluator& evaluator, const SearchOptions& options) {
  return detail::greedy_prune(evaluator, options, Strategy::kAStar, /*eliminate=*/true);
}

}  // namespace headprune
