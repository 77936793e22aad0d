#include <doctest.h>

#include <random>
#include <set>

#include "headprune/baselines.hpp"
#include "reference.hpp"

using namespace headprune;

namespace {

const WeightMatrix kSmall = {{-0.5, 0.2}, {0.4, 1.0}};

Evaluator additive(const WeightMatrix& w, double baseline = 90.0) {
  return Evaluator(std::make_shared<AdditiveOracle>(AdditiveOracleSpec{baseline, w, 0.0, 0}));
}

WeightMatrix constant(const Geometry& g, double v) {
  return WeightMatrix(static_cast<std::size_t>(g.layers),
                      std::vector<double>(static_cast<std::size_t>(g.heads_per_layer), v));
}

}  // namespace

TEST_CASE("local pruning on 12x12 with unbounded budget evaluates m(m+1)/2 candidates") {
  std::mt19937_64 rng(1);
  auto ev = additive(ref::mixed_weights(Geometry(12, 12), rng));
  const auto s = local_prune(ev, {kUnbounded, CostMode::kIncremental, 1});
  CHECK(s.candidate_evaluations == 10440);
  CHECK(s.pruned.size() == 144);
  CHECK(s.counter.computed == 10441);  // plus the empty mask
}

TEST_CASE("local pruning on a single head") {
  auto ev = additive({{0.3}});
  const auto s = local_prune(ev, {kUnbounded, CostMode::kIncremental, 1});
  CHECK(s.candidate_evaluations == 1);
  CHECK(s.pruned.size() == 1);
}

TEST_CASE("local pruning on the 2x2 fixture") {
  auto ev = additive(kSmall);
  const auto s = local_prune(ev, {0.7, CostMode::kIncremental, 1});
  CHECK(s.pruned_heads() == std::vector<HeadIndex>{{0, 0}, {0, 1}, {1, 0}});
  // 4 + 3 + 2 candidates to prune three heads, then one more to find that
  // (1,1) at cost 1.0 does not fit in the remaining 0.1.
  CHECK(s.candidate_evaluations == 10);
  CHECK(s.stop_reason == "cost_exceeds_budget");
  CHECK(s.eliminated.empty());
}

TEST_CASE("global pruning evaluates columns") {
  SUBCASE("12x12 unbounded") {
    auto ev = additive(constant(Geometry(12, 12), 0.1));
    const auto s = global_prune(ev, {kUnbounded, CostMode::kIncremental, 1});
    CHECK(s.candidate_evaluations == 78);
    CHECK(s.pruned.size() == 144);
    CHECK(s.trace.size() == 12);
  }
  SUBCASE("2x2 fixture at budget 0.7") {
    auto ev = additive(kSmall);
    const auto s = global_prune(ev, {0.7, CostMode::kIncremental, 1});
    CHECK(s.pruned_heads() == std::vector<HeadIndex>{{0, 0}, {1, 0}});
    REQUIRE(s.trace.size() == 1);
    CHECK(s.trace[0].raw_cost == doctest::Approx(-0.1).epsilon(1e-9));
    CHECK(s.trace[0].clamped_cost == 0.0);
    CHECK(s.ledger.charged() == 0.0);
    REQUIRE(s.terminal.has_value());
    CHECK(s.terminal->costs[0].cost == doctest::Approx(1.2).epsilon(1e-9));
    CHECK(s.candidate_evaluations == 3);
  }
  SUBCASE("zero budget") {
    auto ev = additive(kSmall);
    const auto s = global_prune(ev, {0.0, CostMode::kIncremental, 1});
    CHECK(s.pruned.empty());
    CHECK(s.candidate_evaluations == 0);
  }
}

TEST_CASE("property: full-run evaluation counts") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 25; ++t) {
    const Geometry g(1 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 8));
    const long m = g.total_heads();
    const long n = g.heads_per_layer;
    const auto w = ref::mixed_weights(g, rng);
    auto a = additive(w);
    CHECK(local_prune(a, {kUnbounded, CostMode::kIncremental, 1}).candidate_evaluations == m * (m + 1) / 2);
    auto b = additive(w);
    CHECK(global_prune(b, {kUnbounded, CostMode::kIncremental, 1}).candidate_evaluations == n * (n + 1) / 2);
  }
}

TEST_CASE("seeded permutation is a deterministic permutation") {
  const auto heads = all_heads(Geometry(4, 5));
  const auto p = seeded_permutation(heads, 42);
  CHECK(p == seeded_permutation(heads, 42));
  CHECK(p != seeded_permutation(heads, 43));
  CHECK(std::set<HeadIndex>(p.begin(), p.end()).size() == heads.size());
}

TEST_CASE("random trial edge cases") {
  SUBCASE("budget large enough for everything") {
    auto ev = additive(constant(Geometry(3, 4), 0.1));
    CHECK(random_trial(ev, 100.0, 3).pruned_count == 12);
  }
  SUBCASE("zero budget with positive weights") {
    auto ev = additive(constant(Geometry(3, 4), 0.1));
    const auto r = random_trial(ev, 0.0, 3);
    CHECK(r.pruned_count == 0);
    CHECK(r.final_accuracy == 90.0);
    CHECK(r.budget_used == 0.0);
  }
  SUBCASE("a permutation starting at the expensive head stops immediately") {
    std::uint64_t seed = 0;
    while (seeded_permutation(all_heads(Geometry(2, 2)), seed).front() != HeadIndex{1, 1}) ++seed;
    auto ev = additive(kSmall);
    CHECK(random_trial(ev, 0.7, seed).pruned_count == 0);
  }
}

TEST_CASE("random trial matches a closed-form prefix walk") {
  std::mt19937_64 rng(4);
  const Geometry g(5, 6);
  const auto w = ref::mixed_weights(g, rng);
  auto ev = additive(w, 85.0);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const double budget = 0.25 * static_cast<double>(seed % 8);
    double drop = 0.0;
    int expected = 0;
    for (const auto& h : seeded_permutation(all_heads(g), seed)) {
      if (drop + w[h.layer][h.head] > budget + 1e-12) break;
      drop += w[h.layer][h.head];
      ++expected;
    }
    const auto r = random_trial(ev, budget, seed);
    CHECK(r.pruned_count == expected);
    CHECK(r.budget_used <= budget + 1e-9);
    CHECK(r.seed == seed);
  }
}

TEST_CASE("random experiment summaries") {
  std::mt19937_64 rng(8);
  const auto w = ref::mixed_weights(Geometry(6, 6), rng);
  auto ev = additive(w);
  const auto d = random_experiment(ev, 1.0, 100, 500);
  CHECK(d.trials == 100);
  int mass = 0;
  for (const auto& [count, freq] : d.pruned_histogram) mass += freq;
  CHECK(mass == 100);
  int budget_mass = 0;
  for (const auto& b : d.budget_histogram) budget_mass += b.count;
  CHECK(budget_mass == 100);
  CHECK(d.results.front().seed == 500);
  CHECK(d.results.back().seed == 599);
  CHECK(d.min_pruned <= d.median_pruned);
  CHECK(d.median_pruned <= d.p95_pruned);
  CHECK(d.p95_pruned <= d.max_pruned);

  auto ev2 = additive(w);
  CHECK(random_experiment(ev2, 1.0, 100, 500, 4) == d);

  auto ev3 = additive(w);
  const auto one = random_experiment(ev3, 1.0, 1, 7);
  CHECK(one.min_pruned == one.max_pruned);
  CHECK(one.median_pruned == one.min_pruned);
  CHECK(one.p95_pruned == one.min_pruned);
}

TEST_CASE("order statistics use nearest rank") {
  std::vector<TrialResult> results;
  for (int k = 1; k <= 20; ++k) results.push_back({static_cast<std::uint64_t>(k), k, 0.0, 90.0});
  const auto d = summarize_trials(results, 1.0);
  CHECK(d.min_pruned == 1);
  CHECK(d.max_pruned == 20);
  CHECK(d.median_pruned == 10.5);
  CHECK(d.p95_pruned == 19);
  CHECK_THROWS_AS(summarize_trials({}, 1.0), ConfigError);
}

TEST_CASE("property: astar and local agree on additive oracles; astar searches less") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const Geometry g(2 + static_cast<int>(rng() % 6), 2 + static_cast<int>(rng() % 6));
    const auto w = ref::mixed_weights(g, rng);
    const double budget = 0.2 + 2.5 * u(rng);
    auto a = additive(w);
    auto l = additive(w);
    const auto sa = astar_prune(a, {budget, CostMode::kIncremental, 1});
    const auto sl = local_prune(l, {budget, CostMode::kIncremental, 1});
    CHECK(sa.pruned_heads() == sl.pruned_heads());
    CHECK(sa.counter.computed <= sl.counter.computed);
  }
}

TEST_CASE("property: every strategy respects the budget on noise-free oracles") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const Geometry g(1 + static_cast<int>(rng() % 6), 1 + static_cast<int>(rng() % 6));
    const double budget = 4.0 * u(rng);
    std::shared_ptr<AccuracyOracle> oracle;
    if (t % 2 == 0) {
      oracle = std::make_shared<AdditiveOracle>(AdditiveOracleSpec{80.0, ref::mixed_weights(g, rng), 0.0, 0});
    } else {
      WeightMatrix w(static_cast<std::size_t>(g.layers), std::vector<double>(static_cast<std::size_t>(g.heads_per_layer)));
      for (auto& row : w)
        for (auto& x : row) x = 0.8 * u(rng);
      oracle = std::make_shared<SupermodularOracle>(SupermodularOracleSpec{80.0, w, 0.2 * u(rng)});
    }
    const SearchOptions opts{budget, CostMode::kIncremental, 1};
    Evaluator e1(oracle), e2(oracle), e3(oracle), e4(oracle);
    CHECK(astar_prune(e1, opts).final_accuracy >= 80.0 - budget - 1e-9);
    CHECK(local_prune(e2, opts).final_accuracy >= 80.0 - budget - 1e-9);
    CHECK(global_prune(e3, opts).final_accuracy >= 80.0 - budget - 1e-9);
    CHECK(random_trial(e4, budget, static_cast<std::uint64_t>(t)).final_accuracy >= 80.0 - budget - 1e-9);
  }
}
