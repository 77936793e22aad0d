#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "headprune/errors.hpp"
#include "headprune/head_space.hpp"
#include "headprune/oracle.hpp"

namespace headprune {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Which accuracy a candidate's cost is measured against.
enum class CostMode {
  kIncremental,  // accuracy of the model with the current pruned list applied
  kBaseline,     // accuracy of the unpruned model
};

enum class Strategy { kAStar, kLocal, kGlobal, kRandom };

std::string to_string(CostMode mode);
std::string to_string(Strategy strategy);
CostMode parse_cost_mode(const std::string& text);
Strategy parse_strategy(const std::string& text);

/// Tracks how much of the accuracy budget has been spent.
/// remaining() == given() - charged() always holds.
class BudgetLedger {
 public:
  BudgetLedger() = default;
  /// `given` must be >= 0; kUnbounded is allowed.
  explicit BudgetLedger(double given);

  /// Charges a non-negative amount. Negative charges are an InvariantError.
  void charge(double amount);

  double given() const noexcept { return given_; }
  double charged() const noexcept { return charged_; }
  double remaining() const noexcept { return given_ - charged_; }
  bool unbounded() const noexcept { return given_ == kUnbounded; }

  friend bool operator==(const BudgetLedger&, const BudgetLedger&) = default;

 private:
  double given_ = 0.0;
  double charged_ = 0.0;
};

/// Layer value used in cost entries that stand for a whole head column
/// (global pruning moves).
inline constexpr int kWholeColumn = -1;

struct CostEntry {
  HeadIndex head;
  double post_accuracy = 0.0;  // P
  double cost = 0.0;           // C = A_ref - P

  friend bool operator==(const CostEntry&, const CostEntry&) = default;
};

struct CostTable {
  int iteration = 0;
  double reference_accuracy = 0.0;  // A_ref
  std::vector<CostEntry> entries;   // canonical head order
};

/// Evaluates pruned + {y} for each y in `live` (in parallel when
/// workers > 1; results are merged in canonical order).
CostTable compute_costs(std::span<const HeadIndex> live, const PruneMask& pruned,
                        Evaluator& evaluator, CostMode mode, int workers = 1);

struct Victim {
  HeadIndex head;
  double raw_cost = 0.0;
  double clamped_cost = 0.0;  // max(0, raw_cost)
};

/// Cheapest entry; ties go to the smaller (layer, head).
Victim select_victim(std::span<const CostEntry> costs);

/// Orders entries by ascending cost, ties by canonical head order.
void sort_by_cost(std::vector<CostEntry>& entries);

struct EliminationRecord {
  HeadIndex head;
  double estimate = 0.0;       // E_y, clamped non-negative
  double contribution = 0.0;   // I_y = E_y - C_x
  double running_total = 0.0;  // T after visiting y
  bool eliminated = false;

  friend bool operator==(const EliminationRecord&, const EliminationRecord&) = default;
};

/// Walks survivors in ascending cost, admitting each while the running
/// total of contributions stays within `remaining_budget`. The first head
/// that does not fit, and every costlier one, is eliminated.
std::vector<EliminationRecord> eliminate_candidates(std::span<const CostEntry> survivors_sorted,
                                                    double victim_clamped_cost,
                                                    double remaining_budget);

/// One committed pruning move.
struct TraceRow {
  int iteration = 0;
  std::vector<HeadIndex> pruned;  // one head, or a whole column for global pruning
  double raw_cost = 0.0;
  double clamped_cost = 0.0;
  double accuracy_after = 0.0;
  double charged_cumulative = 0.0;
  int live_count = 0;  // candidates left after pruning and elimination
  std::int64_t evaluations = 0;
  std::vector<CostEntry> costs;
  std::vector<EliminationRecord> elimination;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct PrunedEntry {
  HeadIndex head;
  int iteration = 0;
  double raw_cost = 0.0;
  double clamped_cost = 0.0;

  friend bool operator==(const PrunedEntry&, const PrunedEntry&) = default;
};

struct EliminatedEntry {
  HeadIndex head;
  int iteration = 0;
  double cost = 0.0;  // cost observed in the eliminating iteration

  friend bool operator==(const EliminatedEntry&, const EliminatedEntry&) = default;
};

/// The final iteration that evaluated candidates but committed nothing.
struct TerminalProbe {
  int iteration = 0;
  std::int64_t evaluations = 0;
  std::vector<CostEntry> costs;

  friend bool operator==(const TerminalProbe&, const TerminalProbe&) = default;
};

struct PruneSolution {
  Strategy strategy = Strategy::kAStar;
  Geometry geometry;
  CostMode mode = CostMode::kIncremental;
  double baseline_accuracy = 0.0;
  BudgetLedger ledger;
  std::vector<PrunedEntry> pruned;  // prune order (L)
  std::vector<EliminatedEntry> eliminated;
  std::vector<TraceRow> trace;
  std::optional<TerminalProbe> terminal;
  std::string stop_reason;
  double final_accuracy = 0.0;
  std::int64_t candidate_evaluations = 0;
  EvalCounter counter;

  PruneMask mask() const;
  std::vector<HeadIndex> pruned_heads() const;

  friend bool operator==(const PruneSolution&, const PruneSolution&) = default;
};

/// Oracle failure in the middle of a search. Carries everything computed
/// before the failure.
class SearchAborted : public OracleError {
 public:
  SearchAborted(const std::string& message, PruneSolution partial)
      : OracleError(message), partial_(std::make_shared<PruneSolution>(std::move(partial))) {}

  const PruneSolution& partial() const noexcept { return *partial_; }

 private:
  std::shared_ptr<const PruneSolution> partial_;
};

struct SearchOptions {
  double budget = 0.0;  // percentage points; kUnbounded allowed
  CostMode mode = CostMode::kIncremental;
  int workers = 1;
};

/// Budgeted best-first head pruning with heuristic elimination.
PruneSolution astar_prune(Evaluator& evaluator, const SearchOptions& options);

}  // namespace headprune
