#pragma once

#include "headprune/pruning.hpp"

namespace headprune::detail {

// Single-head greedy loop shared by A* pruning (with elimination) and
// local pruning (without).
PruneSolution greedy_prune(Evaluator& evaluator, const SearchOptions& options, Strategy strategy,
                           bool eliminate);

PruneSolution start_solution(const Evaluator& evaluator, const SearchOptions& options,
                             Strategy strategy);

void finish_solution(PruneSolution& solution, const Evaluator& evaluator);

}  // namespace headprune::detail
