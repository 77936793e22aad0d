#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "headprune/errors.hpp"
#include "headprune/harness.hpp"

namespace headprune {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& j) { return j.is_null() ? kUnbounded : j.get<double>(); }

ordered_json cost_entry_json(const CostEntry& e) {
  ordered_json j;
  j["head"] = json(e.head);
  j["post_accuracy"] = e.post_accuracy;
  j["cost"] = e.cost;
  return j;
}

CostEntry cost_entry_from(const json& j) {
  return {j.at("head").get<HeadIndex>(), j.at("post_accuracy").get<double>(),
          j.at("cost").get<double>()};
}

ordered_json cost_list_json(const std::vector<CostEntry>& costs) {
  auto a = ordered_json::array();
  for (const auto& e : costs) a.push_back(cost_entry_json(e));
  return a;
}

std::vector<CostEntry> cost_list_from(const json& j) {
  std::vector<CostEntry> out;
  for (const auto& e : j) out.push_back(cost_entry_from(e));
  return out;
}

std::string head_label(HeadIndex h) {
  return std::to_string(h.layer) + ":" + std::to_string(h.head);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

ordered_json solution_to_json(const PruneSolution& s) {
  ordered_json j;
  j["strategy"] = to_string(s.strategy);
  j["geometry"] = json(s.geometry);
  j["cost_mode"] = to_string(s.mode);
  j["baseline_accuracy"] = s.baseline_accuracy;
  j["budget"] = {{"given", number_or_null(s.ledger.given())},
                 {"charged", s.ledger.charged()},
                 {"remaining", number_or_null(s.ledger.remaining())}};

  auto pruned = ordered_json::array();
  for (const auto& p : s.pruned) {
    ordered_json e;
    e["head"] = json(p.head);
    e["iteration"] = p.iteration;
    e["raw_cost"] = p.raw_cost;
    e["clamped_cost"] = p.clamped_cost;
    pruned.push_back(std::move(e));
  }
  j["pruned"] = std::move(pruned);

  auto eliminated = ordered_json::array();
  for (const auto& e : s.eliminated) {
    ordered_json o;
    o["head"] = json(e.head);
    o["iteration"] = e.iteration;
    o["cost"] = e.cost;
    eliminated.push_back(std::move(o));
  }
  j["eliminated"] = std::move(eliminated);

  auto trace = ordered_json::array();
  for (const auto& r : s.trace) {
    ordered_json o;
    o["iteration"] = r.iteration;
    o["pruned"] = json(r.pruned);
    o["raw_cost"] = r.raw_cost;
    o["clamped_cost"] = r.clamped_cost;
    o["accuracy_after"] = r.accuracy_after;
    o["charged_cumulative"] = r.charged_cumulative;
    o["live_count"] = r.live_count;
    o["evaluations"] = r.evaluations;
    o["costs"] = cost_list_json(r.costs);
    auto elim = ordered_json::array();
    for (const auto& e : r.elimination) {
      ordered_json x;
      x["head"] = json(e.head);
      x["estimate"] = e.estimate;
      x["contribution"] = e.contribution;
      x["running_total"] = e.running_total;
      x["outcome"] = e.eliminated ? "eliminated" : "kept";
      elim.push_back(std::move(x));
    }
    o["elimination"] = std::move(elim);
    trace.push_back(std::move(o));
  }
  j["trace"] = std::move(trace);

  if (s.terminal) {
    ordered_json t;
    t["iteration"] = s.terminal->iteration;
    t["evaluations"] = s.terminal->evaluations;
    t["costs"] = cost_list_json(s.terminal->costs);
    j["terminal"] = std::move(t);
  } else {
    j["terminal"] = nullptr;
  }
  j["stop_reason"] = s.stop_reason;
  j["final_accuracy"] = s.final_accuracy;
  j["evaluations"] = {{"candidate", s.candidate_evaluations},
                      {"requested", s.counter.requested},
                      {"computed", s.counter.computed}};
  return j;
}

PruneSolution solution_from_json(const json& j) {
  try {
    PruneSolution s;
    s.strategy = parse_strategy(j.at("strategy").get<std::string>());
    s.geometry = j.at("geometry").get<Geometry>();
    s.mode = parse_cost_mode(j.at("cost_mode").get<std::string>());
    s.baseline_accuracy = j.at("baseline_accuracy").get<double>();
    s.ledger = BudgetLedger(number_or_inf(j.at("budget").at("given")));
    s.ledger.charge(j.at("budget").at("charged").get<double>());

    for (const auto& e : j.at("pruned")) {
      s.pruned.push_back({e.at("head").get<HeadIndex>(), e.at("iteration").get<int>(),
                          e.at("raw_cost").get<double>(), e.at("clamped_cost").get<double>()});
    }
    for (const auto& e : j.at("eliminated")) {
      s.eliminated.push_back({e.at("head").get<HeadIndex>(), e.at("iteration").get<int>(),
                              e.at("cost").get<double>()});
    }
    for (const auto& o : j.at("trace")) {
      TraceRow r;
      r.iteration = o.at("iteration").get<int>();
      r.pruned = o.at("pruned").get<std::vector<HeadIndex>>();
      r.raw_cost = o.at("raw_cost").get<double>();
      r.clamped_cost = o.at("clamped_cost").get<double>();
      r.accuracy_after = o.at("accuracy_after").get<double>();
      r.charged_cumulative = o.at("charged_cumulative").get<double>();
      r.live_count = o.at("live_count").get<int>();
      r.evaluations = o.at("evaluations").get<std::int64_t>();
      r.costs = cost_list_from(o.at("costs"));
      for (const auto& x : o.at("elimination")) {
        r.elimination.push_back({x.at("head").get<HeadIndex>(), x.at("estimate").get<double>(),
                                 x.at("contribution").get<double>(),
                                 x.at("running_total").get<double>(),
                                 x.at("outcome").get<std::string>() == "eliminated"});
      }
      s.trace.push_back(std::move(r));
    }
    if (!j.at("terminal").is_null()) {
      const auto& t = j.at("terminal");
      s.terminal = TerminalProbe{t.at("iteration").get<int>(), t.at("evaluations").get<std::int64_t>(),
                                 cost_list_from(t.at("costs"))};
    }
    s.stop_reason = j.at("stop_reason").get<std::string>();
    s.final_accuracy = j.at("final_accuracy").get<double>();
    s.candidate_evaluations = j.at("evaluations").at("candidate").get<std::int64_t>();
    s.counter.requested = j.at("evaluations").at("requested").get<std::uint64_t>();
    s.counter.computed = j.at("evaluations").at("computed").get<std::uint64_t>();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run report: ") + e.what());
  }
}

ordered_json distribution_to_json(const DistributionSummary& d) {
  ordered_json j;
  j["trials"] = d.trials;
  j["budget"] = number_or_null(d.budget);
  j["min_pruned"] = d.min_pruned;
  j["median_pruned"] = d.median_pruned;
  j["max_pruned"] = d.max_pruned;
  j["p95_pruned"] = d.p95_pruned;
  auto hist = ordered_json::array();
  for (const auto& [count, freq] : d.pruned_histogram) hist.push_back({count, freq});
  j["pruned_histogram"] = std::move(hist);
  auto bins = ordered_json::array();
  for (const auto& b : d.budget_histogram) {
    ordered_json o;
    o["lower"] = b.lower;
    o["upper"] = b.upper;
    o["count"] = b.count;
    bins.push_back(std::move(o));
  }
  j["budget_histogram"] = std::move(bins);
  auto results = ordered_json::array();
  for (const auto& r : d.results) {
    ordered_json o;
    o["seed"] = r.seed;
    o["pruned_count"] = r.pruned_count;
    o["budget_used"] = r.budget_used;
    o["final_accuracy"] = r.final_accuracy;
    results.push_back(std::move(o));
  }
  j["results"] = std::move(results);
  return j;
}

DistributionSummary distribution_from_json(const json& j) {
  try {
    std::vector<TrialResult> results;
    for (const auto& o : j.at("results")) {
      results.push_back({o.at("seed").get<std::uint64_t>(), o.at("pruned_count").get<int>(),
                         o.at("budget_used").get<double>(), o.at("final_accuracy").get<double>()});
    }
    return summarize_trials(std::move(results), number_or_inf(j.at("budget")));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed distribution report: ") + e.what());
  }
}

std::string mask_matrix_csv(const PruneSolution& s) {
  const auto mask = s.mask();
  std::ostringstream out;
  for (int i = 0; i < s.geometry.layers; ++i) {
    for (int j = 0; j < s.geometry.heads_per_layer; ++j) {
      if (j > 0) out << ',';
      out << (mask.contains({i, j}) ? "pruned" : "kept");
    }
    out << '\n';
  }
  return out.str();
}

std::string sorted_cost_csv(const PruneSolution& s) {
  std::map<HeadIndex, double> last_cost;
  auto observe = [&](const std::vector<CostEntry>& costs) {
    for (const auto& e : costs) {
      if (e.head.layer == kWholeColumn) {
        for (int i = 0; i < s.geometry.layers; ++i) last_cost[{i, e.head.head}] = e.cost;
      } else {
        last_cost[e.head] = e.cost;
      }
    }
  };
  for (const auto& r : s.trace) observe(r.costs);
  if (s.terminal) observe(s.terminal->costs);

  std::map<HeadIndex, std::string> label;
  for (const auto& h : all_heads(s.geometry)) label[h] = "kept";
  for (const auto& e : s.eliminated) {
    label[e.head] = "eliminated";
    last_cost[e.head] = e.cost;
  }
  for (const auto& p : s.pruned) {
    label[p.head] = "pruned";
    last_cost[p.head] = p.raw_cost;
  }

  std::vector<HeadIndex> order = all_heads(s.geometry);
  std::stable_sort(order.begin(), order.end(), [&](HeadIndex a, HeadIndex b) {
    const auto ia = last_cost.find(a);
    const auto ib = last_cost.find(b);
    if (ia == last_cost.end() || ib == last_cost.end()) {
      return ia != last_cost.end() && ib == last_cost.end();
    }
    return ia->second < ib->second;
  });

  std::ostringstream out;
  out << "layer,head,cost,label\n";
  for (const auto& h : order) {
    out << h.layer << ',' << h.head << ',';
    if (auto it = last_cost.find(h); it != last_cost.end()) out << format_number(it->second);
    out << ',' << label[h] << '\n';
  }
  return out.str();
}

std::string trace_csv(const PruneSolution& s) {
  std::ostringstream out;
  out << "iteration,pruned,raw_cost,clamped_cost,accuracy,budget_used,live_count,evaluations\n";
  for (const auto& r : s.trace) {
    std::string heads;
    for (const auto& h : r.pruned) heads += (heads.empty() ? "" : " ") + head_label(h);
    out << r.iteration << ',' << heads << ',' << format_number(r.raw_cost) << ','
        << format_number(r.clamped_cost) << ',' << format_number(r.accuracy_after) << ','
        << format_number(r.charged_cumulative) << ',' << r.live_count << ',' << r.evaluations
        << '\n';
  }
  return out.str();
}

std::string trials_csv(const DistributionSummary& d) {
  std::ostringstream out;
  out << "seed,pruned_count,budget_used,final_accuracy\n";
  for (const auto& r : d.results) {
    out << r.seed << ',' << r.pruned_count << ',' << format_number(r.budget_used) << ','
        << format_number(r.final_accuracy) << '\n';
  }
  return out.str();
}

std::string histogram_csv(const DistributionSummary& d) {
  std::ostringstream out;
  out << "metric,bin_lower,bin_upper,count\n";
  for (const auto& [count, freq] : d.pruned_histogram) {
    out << "pruned_count," << count << ',' << count << ',' << freq << '\n';
  }
  for (const auto& b : d.budget_histogram) {
    out << "budget_used," << format_number(b.lower) << ',' << format_number(b.upper) << ','
        << b.count << '\n';
  }
  return out.str();
}

FigureFiles export_figure_data(const PruneSolution& solution, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  FigureFiles files{dir / "mask_matrix.csv", dir / "cost_matrix.csv", dir / "trace.csv"};
  write_file(files.mask_matrix, mask_matrix_csv(solution));
  write_file(files.cost_matrix, sorted_cost_csv(solution));
  write_file(files.trace, trace_csv(solution));
  return files;
}

ZeroBudgetSummary zero_budget_summary(const PruneSolution& s) {
  ZeroBudgetSummary z;
  z.accuracy_at_zero = s.baseline_accuracy;
  // Count individual heads; a global-pruning row removes a whole column.
  for (const auto& row : s.trace) {
    if (row.charged_cumulative != 0.0) break;
    z.heads_at_zero += static_cast<int>(row.pruned.size());
    z.accuracy_at_zero = row.accuracy_after;
  }
  z.compression_at_zero = 100.0 * z.heads_at_zero / s.geometry.total_heads();
  return z;
}

std::int64_t per_head_parameters(const ModelDims& dims) {
  if (dims.hidden < 1 || dims.heads < 1) throw ConfigError("hidden and heads must be positive");
  if (dims.hidden % dims.heads != 0) {
    throw ConfigError("hidden size " + std::to_string(dims.hidden) +
                      " is not divisible by heads " + std::to_string(dims.heads));
  }
  const std::int64_t head_dim = dims.hidden / dims.heads;
  return 4 * dims.hidden * head_dim + 3 * head_dim;
}

std::int64_t param_reduction(const ModelDims& dims, std::int64_t pruned_count) {
  return dims.total_params - pruned_count * per_head_parameters(dims);
}

std::uint64_t fnv1a64(const std::string& bytes) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace headprune
