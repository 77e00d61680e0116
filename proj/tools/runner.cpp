#include "runner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "bratteli/census.hpp"
#include "bratteli/diagram.hpp"
#include "bratteli/diagram_io.hpp"
#include "bratteli/errors.hpp"
#include "bratteli/oracle.hpp"
#include "bratteli/order_io.hpp"
#include "bratteli/ordering.hpp"
#include "bratteli/parallel.hpp"
#include "bratteli/rng.hpp"
#include "bratteli/stats.hpp"
#include "bratteli/vershik.hpp"
#include "bratteli/wrightfisher.hpp"

#ifndef BRATTELI_VERSION
#define BRATTELI_VERSION "0.0.0"
#endif

namespace bratteli::cli {

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Schemas

struct Key {
  std::string name;
  std::optional<std::string> fallback;  // nullopt: required
};

std::vector<Key> with_diagram(std::string sizes, std::vector<Key> keys) {
  keys.insert(keys.begin(), {{"M", std::move(sizes)}, {"generator", "all_ones"}, {"diagram", ""}});
  keys.push_back({"seed", std::nullopt});
  return keys;
}

std::vector<Key> plain(std::vector<Key> keys) {
  keys.push_back({"seed", std::nullopt});
  return keys;
}

const std::map<std::string, std::vector<Key>>& schemas() {
  static const std::map<std::string, std::vector<Key>> table{
      {"sample-order", with_diagram("list:1,2,2", {{"depth", "2"}, {"trials", "1000"}, {"dump-orders", "true"}})},
      {"successor-orbit",
       with_diagram("list:1,3,3", {{"depth", "2"}, {"trials", "50"}, {"mode", "orbit"}, {"random", "false"}})},
      {"wf-sim", plain({{"M", "const:2"},
                        {"depth", "20"},
                        {"trials", "10000"},
                        {"start", "1"},
                        {"initial", ""},
                        {"significance", "0.001"}})},
      {"donnelly-scan", plain({{"M", "const:3"}, {"depth", "60"}, {"trials", "5000"}, {"start", "1"}})},
      {"census", with_diagram("const:2", {{"k", "1"}, {"depths", "40"}, {"trials", "5000"}})},
      {"evolve-split", plain({{"M", "poly:(n+2)^3"},
                              {"K", "3"},
                              {"kappa", "0.2"},
                              {"depth", ""},
                              {"schedule", ""},
                              {"trials", "2000"}})},
      {"cascade", with_diagram("poly:(n+2)^4", {{"mode", "cascade"},
                                                {"N", "5"},
                                                {"depth", "12"},
                                                {"eps-tail", "0.45"},
                                                {"attempts", "100"},
                                                {"trials", "500"},
                                                {"level", ""},
                                                {"eps", "1/10"},
                                                {"samples", "10000"}})},
      {"lemma-oracle", plain({{"n", "4"},
                              {"labels", "3"},
                              {"exhaustive", "false"},
                              {"random-instances", "100"},
                              {"random-n", ""},
                              {"extremal", "false"}})},
      {"imperfection",
       with_diagram("list:1,5,9,9,9,9", {{"n", "1"}, {"N", "2"}, {"Np", "5"}, {"trials", "10000"}, {"exact", "false"}})},
      {"exact-oracle", with_diagram("list:1,2,2,2,2", {{"depth", ""},
                                                       {"k", "1"},
                                                       {"census-depth", ""},
                                                       {"n", "1"},
                                                       {"N", "2"},
                                                       {"Np", "0"},
                                                       {"trials", "0"}})},
  };
  return table;
}

// ---------------------------------------------------------------------------
// Recipes

const std::map<std::string, ExperimentConfig>& recipes() {
  static const std::map<std::string, ExperimentConfig> table{
      {"bing-exhaustive",
       {"lemma-oracle", {{"n", "3..6"}, {"exhaustive", "true"}, {"random-instances", "500"}, {"random-n", "7"}, {"seed", "101"}}}},
      {"bing-extremal",
       {"lemma-oracle", {{"n", "3..8"}, {"extremal", "true"}, {"random-instances", "0"}, {"seed", "102"}}}},
      {"trail-bijection", {"lemma-oracle", {{"n", "2..6"}, {"random-instances", "200"}, {"seed", "103"}}}},
      {"wf-martingale",
       {"wf-sim", {{"M", "const:5"}, {"start", "1"}, {"initial", "2"}, {"depth", "26"}, {"trials", "10000"}, {"seed", "104"}}}},
      {"wf-binomial",
       {"wf-sim", {{"M", "const:5"}, {"start", "1"}, {"initial", "2"}, {"depth", "26"}, {"trials", "10000"}, {"seed", "105"}}}},
      {"dichotomy-divergent", {"census", {{"M", "const:2"}, {"k", "1"}, {"depths", "10,20,40"}, {"trials", "5000"}, {"seed", "106"}}}},
      {"dichotomy-convergent",
       {"census", {{"M", "poly:(n+2)^2"}, {"k", "1"}, {"depths", "10,20,40"}, {"trials", "5000"}, {"seed", "107"}}}},
      {"evolve-split-convergent",
       {"evolve-split", {{"M", "poly:(n+2)^2"}, {"K", "3"}, {"kappa", "0.4"}, {"trials", "500"}, {"seed", "108"}}}},
      {"exact-vs-mc",
       {"exact-oracle",
        {{"M", "list:1,2,3,3,3"}, {"k", "1"}, {"n", "1"}, {"N", "2"}, {"Np", "4"}, {"trials", "100000"}, {"seed", "109"}}}},
      {"successor-orbit", {"successor-orbit", {{"random", "true"}, {"trials", "50"}, {"seed", "110"}}}},
      {"successor-odometer",
       {"successor-orbit", {{"mode", "odometer"}, {"M", "const:1"}, {"generator", "constant_rows(2)"}, {"depth", "10"}, {"seed", "111"}}}},
      {"equitability-hoeffding",
       {"cascade",
        {{"mode", "hoeffding"}, {"M", "list:1,3000,10"}, {"level", "1"}, {"eps", "36/1000"}, {"samples", "10000"}, {"seed", "112"}}}},
      {"finite-rank-j2",
       {"census",
        {{"M", "const:2"}, {"generator", "diagonal_heavy(50*n^2+1, 1)"}, {"k", "1"}, {"depths", "30"}, {"trials", "2000"}, {"seed", "113"}}}},
      {"cascade-quartic", {"cascade", {{"M", "poly:(n+2)^4"}, {"N", "5"}, {"depth", "12"}, {"trials", "500"}, {"seed", "114"}}}},
      {"donnelly-constant", {"donnelly-scan", {{"M", "const:3"}, {"depth", "60"}, {"trials", "5000"}, {"seed", "115"}}}},
      {"donnelly-quadratic", {"donnelly-scan", {{"M", "poly:(n+2)^2"}, {"depth", "60"}, {"trials", "5000"}, {"seed", "116"}}}},
      {"imperfection-bound",
       {"imperfection", {{"M", "list:1,5,9,9,9,9"}, {"n", "1"}, {"N", "2"}, {"Np", "5"}, {"trials", "10000"}, {"seed", "117"}}}},
      {"sample-uniformity", {"sample-order", {{"M", "list:1,4,2"}, {"generator", "all_ones"}, {"depth", "2"}, {"trials", "60000"}, {"dump-orders", "false"}, {"seed", "118"}}}},
  };
  return table;
}

// ---------------------------------------------------------------------------
// Typed access to resolved values

class Params {
 public:
  explicit Params(const ExperimentConfig& config) : config_(config) {}

  const std::string& str(const std::string& key) const {
    const auto it = config_.values.find(key);
    if (it == config_.values.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }

  std::uint64_t u64(const std::string& key) const {
    const auto& text = str(key);
    try {
      std::size_t used = 0;
      const auto value = std::stoull(text, &used);
      if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
      return value;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' needs a non-negative integer, got '" + text + "'");
    }
  }

  std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

  double real(const std::string& key) const {
    const auto& text = str(key);
    try {
      return to_double(parse_rational(text));
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' needs a number, got '" + text + "'");
    }
  }

  Rational rational(const std::string& key) const {
    try {
      return parse_rational(str(key));
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' needs a rational, got '" + str(key) + "'");
    }
  }

  bool flag(const std::string& key) const {
    const auto& text = str(key);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("key '" + key + "' needs true or false, got '" + text + "'");
  }

  bool empty(const std::string& key) const { return str(key).empty(); }

  std::vector<std::size_t> list(const std::string& key) const {
    std::vector<std::size_t> out;
    std::stringstream in(str(key));
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        out.push_back(static_cast<std::size_t>(std::stoull(item)));
      } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' needs a comma-separated list of integers");
      }
    }
    if (out.empty()) throw ConfigError("key '" + key + "' is empty");
    return out;
  }

  /// "a" or "a..b".
  std::pair<std::size_t, std::size_t> range(const std::string& key) const {
    const auto& text = str(key);
    const auto dots = text.find("..");
    try {
      if (dots == std::string::npos) {
        const auto v = static_cast<std::size_t>(std::stoull(text));
        return {v, v};
      }
      const auto a = static_cast<std::size_t>(std::stoull(text.substr(0, dots)));
      const auto b = static_cast<std::size_t>(std::stoull(text.substr(dots + 2)));
      if (b < a) throw std::invalid_argument(text);
      return {a, b};
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' needs an integer or a range a..b, got '" + text + "'");
    }
  }

  std::uint64_t seed() const { return u64("seed"); }

 private:
  const ExperimentConfig& config_;
};

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.10g", x);
  return buffer;
}

std::string cell(const std::string& s) { return s; }
std::string cell(const char* s) { return s; }
std::string cell(double x) { return fmt(x); }
std::string cell(bool b) { return b ? "1" : "0"; }
std::string cell(const BigInt& z) { return to_string(z); }
template <class T>
  requires std::is_integral_v<T>
std::string cell(T x) {
  return std::to_string(x);
}

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const auto* h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  template <class... T>
  void row(const T&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::string numerator_text(const Rational& q) { return to_string(numerator_of(q)); }
std::string denominator_text(const Rational& q) { return to_string(denominator_of(q)); }

BratteliDiagram load(const Params& p, std::optional<std::size_t> depth) {
  if (!p.empty("diagram")) {
    auto diagram = load_diagram(p.str("diagram"));
    if (!depth) return diagram;
    if (*depth + 1 > diagram.depth()) throw ConfigError("diagram file has fewer levels than the requested depth");
    return diagram.truncated(*depth + 1);
  }
  const auto rule = SizeRule::parse(p.str("M"));
  if (!depth) throw ConfigError("a size rule needs an explicit depth");
  return make_diagram(rule, *depth, Generator::parse(p.str("generator")));
}

std::vector<std::uint64_t> sizes_of(const Params& p, std::size_t depth) { return SizeRule::parse(p.str("M")).sizes(depth); }

json interval_json(const stats::Interval& ci) { return json{{"low", ci.low}, {"high", ci.high}}; }

// ---------------------------------------------------------------------------
// Experiments

RunOutput run_sample_order(const Params& p) {
  const auto depth = p.size("depth");
  const auto diagram = load(p, depth);
  const auto trials = p.u64("trials");
  const bool dump = p.flag("dump-orders");
  Csv csv{"trial", "level", "vertex", "ranking"};
  std::vector<Order> orders;
  orders.reserve(trials);
  for (std::uint64_t t = 0; t < trials; ++t) orders.push_back(sample_order(diagram, rng::trial_seed(p.seed(), t), depth));
  // Uniformity per vertex with 2 <= d_v <= 6: Pearson chi-square over the d_v! rankings.
  json uniformity = json::array();
  double min_p = 1.0;
  for (std::size_t level = 1; level <= depth; ++level) {
    for (std::size_t v = 0; v < diagram.level_size(level); ++v) {
      const auto d = diagram.in_degree(level, v);
      if (d < 2 || d > 6) continue;
      std::vector<std::uint32_t> identity(d);
      std::iota(identity.begin(), identity.end(), 0U);
      std::map<std::vector<std::uint32_t>, double> counts;
      auto perm = identity;
      do counts[perm] = 0.0;
      while (std::next_permutation(perm.begin(), perm.end()));
      for (const auto& order : orders) {
        const auto r = order.ranking(level, v);
        counts[std::vector<std::uint32_t>(r.begin(), r.end())] += 1.0;
      }
      std::vector<double> observed, expected;
      for (const auto& [key, c] : counts) {
        observed.push_back(c);
        expected.push_back(static_cast<double>(trials) / static_cast<double>(counts.size()));
      }
      const auto [chi2, cells] = stats::pearson_pooled(observed, expected);
      const double pvalue = cells > 1 ? stats::chi_square_sf(chi2, static_cast<double>(cells - 1)) : 1.0;
      min_p = std::min(min_p, pvalue);
      uniformity.push_back(json{{"level", level}, {"vertex", v}, {"degree", d}, {"chi2", chi2}, {"p_value", pvalue}});
    }
  }
  if (dump) {
    for (std::uint64_t t = 0; t < trials; ++t) {
      for (std::size_t level = 1; level <= depth; ++level) {
        for (std::size_t v = 0; v < diagram.level_size(level); ++v) {
          std::string ranking;
          for (const auto r : orders[t].ranking(level, v)) ranking += (ranking.empty() ? "" : " ") + std::to_string(r);
          csv.row(t, level, v, ranking);
        }
      }
    }
  }
  RunOutput out;
  out.csv["results.csv"] = csv.str();
  out.results = json{{"trials", trials}, {"uniformity", uniformity}, {"min_p_value", min_p}, {"uniform_at_0.001", min_p >= 0.001}};
  if (trials > 0) out.results["first_order"] = dump_order(orders.front());
  return out;
}

std::uint64_t binary_value(const PathPrefix& x) {
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < x.length(); ++i) value |= x.edges[i].copy << i;
  return value;
}

RunOutput run_successor_orbit(const Params& p) {
  const auto mode = p.str("mode");
  RunOutput out;
  if (mode == "odometer") {
    const auto depth = p.size("depth");
    const auto diagram = load(p, depth);
    for (std::size_t n = 1; n <= depth; ++n) {
      if (diagram.level_size(n) != 1 || diagram.in_degree(n, 0) != 2) {
        throw ConfigError("odometer mode needs one vertex per level with two parallel edges");
      }
    }
    const auto order = Order::identity(diagram, depth);
    Csv csv{"prefix", "successor", "pivot", "ok"};
    bool all_ok = true;
    for (std::uint64_t value = 0; value < (std::uint64_t{1} << depth); ++value) {
      PathPrefix x;
      for (std::size_t n = 1; n <= depth; ++n) x.edges.push_back(EdgeRef{n, 0, 0, (value >> (n - 1)) & 1U});
      const auto next = successor(order, x);
      const bool last = value + 1 == (std::uint64_t{1} << depth);
      const bool ok = last ? next.extreme : (!next.extreme && binary_value(next.path) == value + 1);
      all_ok = all_ok && ok;
      csv.row(value, next.extreme ? std::string("MAXIMAL") : std::to_string(binary_value(next.path)), next.pivot, ok);
    }
    out.csv["results.csv"] = csv.str();
    out.results = json{{"mode", "odometer"}, {"prefixes", std::uint64_t{1} << depth}, {"all_ok", all_ok}};
    return out;
  }
  if (mode != "orbit") throw ConfigError("mode must be orbit or odometer");
  const auto trials = p.u64("trials");
  const bool random = p.flag("random");
  Csv csv{"trial", "diagram", "vertex", "paths", "orbit_length", "increasing", "complete"};
  bool all_ok = true;
  std::uint64_t orbits = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto seed = rng::trial_seed(p.seed(), t);
    std::optional<BratteliDiagram> diagram;
    std::size_t depth = 0;
    if (random) {
      // Small random diagram: 2..4 levels of 1..3 vertices, one of three generators.
      rng::CounterStream stream(rng::derive(seed ^ rng::kInstanceTag, 0));
      depth = 2 + static_cast<std::size_t>(stream.bounded(3));
      std::vector<std::uint64_t> sizes{1};
      for (std::size_t n = 1; n <= depth; ++n) sizes.push_back(1 + stream.bounded(3));
      static const char* generators[] = {"all_ones", "cyclic(2)", "constant_rows(2)"};
      diagram = make_diagram(sizes, Generator::parse(generators[stream.bounded(3)]));
    } else {
      depth = p.size("depth");
      diagram = load(p, depth);
    }
    const auto order = sample_order(*diagram, seed, depth);
    std::string label;
    for (const auto m : diagram->level_sizes()) label += (label.empty() ? "" : " ") + std::to_string(m);
    label += " " + (diagram->generator().empty() ? std::string("explicit") : diagram->generator());
    for (std::size_t v = 0; v < diagram->level_size(depth); ++v) {
      const auto check = successor_orbit(order, depth, v);
      all_ok = all_ok && check.ok();
      ++orbits;
      csv.row(t, "\"" + label + "\"", v, check.paths, check.orbit_length, check.strictly_increasing, check.complete);
    }
  }
  out.csv["results.csv"] = csv.str();
  out.results = json{{"mode", "orbit"}, {"trials", trials}, {"orbits", orbits}, {"all_ok", all_ok}};
  return out;
}

RunOutput run_wf_sim(const Params& p) {
  const auto depth = p.size("depth");
  const auto k = p.size("start");
  const auto sizes = sizes_of(p, depth);
  if (k > depth) throw ConfigError("start level exceeds depth");
  const auto initial = p.empty("initial") ? (sizes[k] + 1) / 2 : p.u64("initial");
  if (initial > sizes[k]) throw ConfigError("initial exceeds the start level size");
  std::vector<std::uint32_t> labels(sizes[k], 0);
  for (std::uint64_t v = 0; v < initial; ++v) labels[v] = 1;
  const auto trials = p.u64("trials");
  const auto runs = simulate_trials(sizes, k, labels, 1, trials, p.seed(), depth);
  const auto stats = martingale_stats(sizes, runs);
  const auto binomial = binomial_transition_test(sizes, runs, p.real("significance"));

  Csv results{"trial", "level", "Y_num", "Y_den", "event"};
  RunOutput out;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto& run = runs[t];
    for (std::size_t i = 0; i < run.y.size(); ++i) {
      const auto level = k + i;
      std::string event;
      if (run.domination_level == level) event = "dominated";
      if (run.extinction_level == level) event = "extinct";
      results.row(t, level, run.y[i].count, run.y[i].size, event);
    }
  }
  Csv levels{"level", "meanY", "seY", "meanQ", "seQ", "expectedQ", "expectedQ_exact", "mean_sq_increment", "mean_predicted_variance"};
  for (const auto& level : stats.levels) {
    levels.row(level.level, level.mean_y, level.se_y, level.mean_q, level.se_q, to_double(level.expected_q),
               to_string(level.expected_q), level.mean_sq_increment, level.mean_predicted_variance);
  }
  out.csv["results.csv"] = results.str();
  out.csv["levels.csv"] = levels.str();
  std::uint64_t fixated = 0;
  for (const auto& run : runs) fixated += run.fixated;
  out.results = json{{"y0", to_string(stats.y0)},
                     {"trials", trials},
                     {"fixated_fraction", trials ? static_cast<double>(fixated) / static_cast<double>(trials) : 0.0},
                     {"martingale_ok", stats.martingale_ok},
                     {"q_decay_ok", stats.q_decay_ok},
                     {"variance_ok", stats.variance_ok},
                     {"pooled_variance_diff", stats.pooled_variance_diff},
                     {"pooled_variance_se", stats.pooled_variance_se},
                     {"binomial", json{{"statistic", binomial.statistic},
                                       {"df", binomial.degrees_of_freedom},
                                       {"strata", binomial.strata},
                                       {"transitions", binomial.transitions},
                                       {"p_value", binomial.p_value},
                                       {"pass", binomial.pass}}}};
  return out;
}

RunOutput run_donnelly(const Params& p) {
  const auto depth = p.size("depth");
  const auto sizes = sizes_of(p, depth);
  const auto curve = donnelly_scan(sizes, p.size("start"), p.u64("trials"), p.seed(), depth);
  Csv csv{"level", "dominated", "trials", "fraction", "reciprocal_sum"};
  for (const auto& point : curve) csv.row(point.level, point.dominated, p.u64("trials"), point.fraction, point.reciprocal_sum);
  RunOutput out;
  out.csv["results.csv"] = csv.str();
  out.results = json{{"final_level", curve.back().level},
                     {"final_fraction", curve.back().fraction},
                     {"reciprocal_sum", curve.back().reciprocal_sum}};
  return out;
}

RunOutput run_census(const Params& p) {
  const auto depths = p.list("depths");
  const auto k = p.size("k");
  const auto diagram = load(p, depths.back());
  const auto trials = p.u64("trials");
  const auto estimate = estimate_j(diagram, k, depths, trials, p.seed());
  Csv csv{"trial", "depth", "count"};
  for (std::uint64_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < depths.size(); ++i) csv.row(t, depths[i], estimate.counts[t][i]);
  }
  json per_depth = json::array();
  for (std::size_t i = 0; i < depths.size(); ++i) {
    const auto& h = estimate.histogram[i];
    json histogram = json::object();
    std::uint64_t at_least_two = 0;
    for (std::size_t c = 0; c < h.size(); ++c) {
      if (h[c] > 0) histogram[std::to_string(c)] = h[c];
      if (c >= 2) at_least_two += h[c];
    }
    const auto exactly_two = h.size() > 2 ? h[2] : 0;
    const double denom = trials ? static_cast<double>(trials) : 1.0;
    per_depth.push_back(json{{"depth", depths[i]},
                             {"histogram", histogram},
                             {"fraction_one", h.size() > 1 ? static_cast<double>(h[1]) / denom : 0.0},
                             {"fraction_two", static_cast<double>(exactly_two) / denom},
                             {"fraction_at_least_two", static_cast<double>(at_least_two) / denom}});
  }
  RunOutput out;
  out.csv["results.csv"] = csv.str();
  out.results = json{{"k", k}, {"trials", trials}, {"monotone", estimate.monotone}, {"depths", per_depth}};
  return out;
}

RunOutput run_evolve_split(const Params& p) {
  const auto K = p.size("K");
  const auto kappa = p.real("kappa");
  const auto rule = SizeRule::parse(p.str("M"));
  std::vector<std::size_t> schedule;
  std::size_t depth = 0;
  if (!p.empty("schedule")) {
    schedule = p.list("schedule");
    depth = p.empty("depth") ? schedule.back() : p.size("depth");
  } else if (!p.empty("depth")) {
    depth = p.size("depth");
    schedule = greedy_schedule(rule.sizes(depth), K, kappa);
    if (schedule.empty()) throw PreconditionError("no greedy schedule fits within depth " + std::to_string(depth));
  } else {
    constexpr std::size_t kMaxDepth = 5000;
    for (depth = K; depth <= kMaxDepth && schedule.empty(); ++depth) schedule = greedy_schedule(rule.sizes(depth), K, kappa);
    if (schedule.empty()) throw PreconditionError("no greedy schedule fits within depth 5000");
    --depth;
  }
  const auto diagram = make_diagram(rule, depth, Generator::all_ones());
  const auto trials = p.u64("trials");
  const auto result = evolve_and_split_trials(diagram, schedule, kappa, trials, p.seed());
  Csv csv{"trial", "good", "all_nonempty", "tribes_hit_all", "smallest_leaf"};
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto& s = result.trials[t];
    csv.row(t, s.good, s.all_nonempty, s.tribes_hit_all, s.smallest_leaf);
  }
  RunOutput out;
  out.csv["results.csv"] = csv.str();
  const double denom = trials ? static_cast<double>(trials) : 1.0;
  out.results = json{{"schedule", schedule},
                     {"depth", depth},
                     {"trials", trials},
                     {"good", result.good},
                     {"good_fraction", static_cast<double>(result.good) / denom},
                     {"good_and_surjective", result.good_and_surjective},
                     {"good_and_surjective_fraction", static_cast<double>(result.good_and_surjective) / denom},
                     {"target", 1.0 - kappa}};
  return out;
}

RunOutput run_cascade(const Params& p) {
  RunOutput out;
  if (p.str("mode") == "hoeffding") {
    const auto M = SizeRule::parse(p.str("M"));
    const auto level = p.empty("level") ? p.size("N") : p.size("level");
    const auto diagram = load(p, level + 1);
    const auto eps = p.rational("eps");
    const auto rate = equitability_failure_rate(diagram, level, eps, p.u64("samples"), p.seed());
    Csv csv{"sample", "set_size", "deviation_num", "deviation_den", "pass"};
    for (std::size_t t = 0; t < rate.reports.size(); ++t) {
      const auto& r = rate.reports[t];
      csv.row(t, r.set_size, numerator_text(r.worst_deviation), denominator_text(r.worst_deviation), r.pass);
    }
    out.csv["results.csv"] = csv.str();
    out.results = json{{"mode", "hoeffding"},
                       {"level", level},
                       {"eps", to_string(eps)},
                       {"samples", rate.samples},
                       {"failures", rate.failures},
                       {"rate", rate.rate},
                       {"strong_bound", rate.bounds.strong},
                       {"weak_bound", rate.bounds.weak},
                       {"within_weak_bound", rate.within_weak_bound}};
    return out;
  }
  if (p.str("mode") != "cascade") throw ConfigError("mode must be cascade or hoeffding");
  const auto N = p.size("N");
  const auto depth = p.size("depth");
  const auto diagram = load(p, depth);
  const auto c = classify(diagram, default_delta_candidates());
  if (!c.superquadratic) throw PreconditionError("cascade needs a superquadratic diagram");
  const auto eps = default_eps_sequence(c.superquadratic->delta, N, depth, p.real("eps-tail"));
  const auto search = find_equitable_set(diagram, N, eps[0], p.u64("attempts"), p.seed());
  if (!search.set) throw PreconditionError("no eps_N-equitable starting set found");
  const auto trials = p.u64("trials");
  const auto result = equitability_cascade_trials(diagram, N, eps, depth, *search.set, trials, p.seed());
  Csv csv{"trial", "level", "set_size", "deviation_num", "deviation_den", "pass"};
  for (std::uint64_t t = 0; t < trials; ++t) {
    for (const auto& level : result.trials[t].levels) {
      csv.row(t, level.level, level.set_size, numerator_text(level.deviation), denominator_text(level.deviation), level.pass);
    }
  }
  out.csv["results.csv"] = csv.str();
  const double denom = trials ? static_cast<double>(trials) : 1.0;
  const double fraction = static_cast<double>(result.successes) / denom;
  const double se = stats::proportion_se(result.success_bound, trials);
  json eps_json = json::array();
  for (const auto& e : eps) eps_json.push_back(to_string(e));
  out.results = json{{"mode", "cascade"},
                     {"delta", c.superquadratic->delta},
                     {"eps", eps_json},
                     {"start_set_size", std::count(search.set->begin(), search.set->end(), 1)},
                     {"trials", trials},
                     {"successes", result.successes},
                     {"success_fraction", fraction},
                     {"success_bound", result.success_bound},
                     {"bound_se", se},
                     {"meets_bound", fraction >= result.success_bound - 3.0 * se}};
  return out;
}

std::string join(const std::vector<std::uint32_t>& values) {
  std::string s;
  for (const auto v : values) s += (s.empty() ? "" : " ") + std::to_string(v);
  return s;
}

RunOutput run_lemma_oracle(const Params& p) {
  const auto [n_lo, n_hi] = p.range("n");
  const auto labels = static_cast<std::uint32_t>(p.u64("labels"));
  const auto random_range = p.empty("random-n") ? std::pair{n_lo, n_hi} : p.range("random-n");
  Csv csv{"instance", "source", "n", "G", "F", "good", "trails", "n_factorial", "bound_ok", "bijection_ok", "extremal_ok"};
  std::uint64_t index = 0, bound_failures = 0, bijection_failures = 0, extremal_failures = 0;
  BigInt worst_num = 0, worst_den = 1;
  auto record = [&](const LemmaInstance& instance, const char* source, bool extremal) {
    const auto n = instance.n();
    const auto good = count_good_orderings(instance);
    const auto trails = count_eulerian_trails(trail_graph(instance));
    const auto nf = factorial(static_cast<unsigned>(n));
    const bool bound_ok = good * (n - 1) <= nf;
    const bool bijection_ok = good == trails;
    bool extremal_ok = true;
    if (extremal) extremal_ok = good == BigInt(n) * factorial(static_cast<unsigned>(n - 2));
    bound_failures += !bound_ok;
    bijection_failures += !bijection_ok;
    extremal_failures += !extremal_ok;
    if (good * worst_den > worst_num * nf) {
      worst_num = good;
      worst_den = nf;
    }
    csv.row(index++, source, n, join(instance.G), join(instance.F), good, trails, nf, bound_ok, bijection_ok,
            extremal ? std::string(extremal_ok ? "1" : "0") : std::string());
  };
  if (p.flag("exhaustive")) {
    for (std::size_t n = n_lo; n <= n_hi; ++n) {
      if (n < 2) continue;
      for_each_instance(n, labels, [&](const LemmaInstance& instance) { record(instance, "exhaustive", false); });
    }
  }
  if (p.flag("extremal")) {
    for (std::size_t n = std::max<std::size_t>(n_lo, 3); n <= n_hi; ++n) record(extremal_instance(n), "extremal", true);
  }
  const auto random_count = p.u64("random-instances");
  const auto span = random_range.second - random_range.first + 1;
  for (std::uint64_t i = 0; i < random_count; ++i) {
    const auto n = std::max<std::size_t>(2, random_range.first + i % span);
    record(random_instance(n, labels, p.seed(), i), "random", false);
  }
  RunOutput out;
  out.csv["results.csv"] = csv.str();
  out.results = json{{"instances", index},
                     {"bound_failures", bound_failures},
                     {"bijection_failures", bijection_failures},
                     {"extremal_failures", extremal_failures},
                     {"largest_ratio", to_string(Rational(worst_num, worst_den))},
                     {"all_pass", bound_failures == 0 && bijection_failures == 0 && extremal_failures == 0}};
  return out;
}

RunOutput run_imperfection(const Params& p) {
  const auto n = p.size("n"), N = p.size("N"), Np = p.size("Np");
  const auto diagram = load(p, Np);
  EstimateOptions options;
  options.exact_when_enumerable = p.flag("exact");
  const auto estimate = estimate_E_probability(diagram, n, N, Np, p.u64("trials"), p.seed(), options);
  Csv csv{"trial_index", "in_D", "in_E"};
  for (std::uint64_t t = 0; t < estimate.trials; ++t) csv.row(t, estimate.trial_in_D[t] != 0, estimate.trial_in_E[t] != 0);
  Csv summary{"empirical_p", "ci_low", "ci_high", "analytic_bound", "analytic_bound_exact"};
  summary.row(estimate.empirical_p, estimate.ci.low, estimate.ci.high, to_double(estimate.analytic_bound),
              to_string(estimate.analytic_bound));
  RunOutput out;
  out.csv["results.csv"] = csv.str();
  out.csv["summary.csv"] = summary.str();
  const auto raw = imperfection_bound(diagram, n, N, Np);
  out.results = json{{"trials", estimate.trials},
                     {"in_D", estimate.in_D},
                     {"in_E", estimate.in_E},
                     {"empirical_p", estimate.empirical_p},
                     {"ci", interval_json(estimate.ci)},
                     {"analytic_bound", to_string(estimate.analytic_bound)},
                     {"analytic_bound_uncapped", raw ? to_string(*raw) : std::string("inf")},
                     {"analytic_bound_value", raw ? to_double(*raw) : INFINITY}};
  if (estimate.exact_p) out.results["exact_p"] = to_string(*estimate.exact_p);
  return out;
}

RunOutput run_exact_oracle(const Params& p) {
  const auto Np = p.size("Np");
  std::optional<std::size_t> depth;
  if (!p.empty("depth")) depth = p.size("depth");
  const auto census_depth_given = !p.empty("census-depth");
  if (!depth) {
    std::size_t need = std::max(Np, census_depth_given ? p.size("census-depth") : 0);
    if (p.empty("diagram")) {
      if (need == 0) {
        const auto rule = p.str("M");
        if (rule.rfind("list:", 0) != 0) throw ConfigError("exact-oracle needs a depth for non-list size rules");
        need = static_cast<std::size_t>(std::count(rule.begin(), rule.end(), ','));
      }
      depth = need;
    }
  }
  const auto diagram = load(p, depth);
  const auto last = diagram.depth() - 1;
  const auto k = p.size("k");
  const auto census_depth = census_depth_given ? p.size("census-depth") : last;
  const auto trials = p.u64("trials");
  Csv csv{"quantity", "exact_num", "exact_den", "exact", "estimate", "se", "within_3se"};
  bool all_within = true;
  auto compare = [&](const std::string& name, const Rational& exact, std::optional<double> estimate) {
    const double pe = to_double(exact);
    if (!estimate) {
      csv.row(name, numerator_text(exact), denominator_text(exact), pe, std::string(), std::string(), std::string());
      return;
    }
    const double se = stats::proportion_se(pe, trials);
    const bool within = std::abs(*estimate - pe) <= 3.0 * se + 1e-12;
    all_within = all_within && within;
    csv.row(name, numerator_text(exact), denominator_text(exact), pe, *estimate, se, within);
  };
  const auto census = exact_census(diagram, k, census_depth);
  std::optional<JEstimate> mc;
  if (trials > 0) {
    const std::size_t d[] = {census_depth};
    mc = estimate_j(diagram, k, d, trials, p.seed());
  }
  Rational total = 0;
  for (std::size_t c = 1; c <= diagram.level_size(k); ++c) {
    const auto it = census.find(c);
    const Rational exact = it == census.end() ? Rational(0) : it->second;
    total += exact;
    std::optional<double> estimate;
    if (mc) estimate = static_cast<double>(mc->histogram[0][c]) / static_cast<double>(trials);
    compare("census.count" + std::to_string(c), exact, estimate);
  }
  json results{{"census_sum", to_string(total)}};
  if (Np > 0) {
    const auto n = p.size("n"), N = p.size("N");
    const auto exact = exact_imperfection(diagram, n, N, Np);
    std::optional<double> estimate_e, estimate_d;
    if (trials > 0) {
      const auto est = estimate_E_probability(diagram, n, N, Np, trials, p.seed());
      estimate_e = est.empirical_p;
      estimate_d = static_cast<double>(est.in_D) / static_cast<double>(trials);
    }
    compare("imperfection.P_E", exact.p_E, estimate_e);
    compare("imperfection.P_D", exact.p_D, estimate_d);
    if (exact.bound) compare("imperfection.bound", *exact.bound, std::nullopt);
    results["inequality_holds"] = exact.inequality_holds;
  }
  results["all_within_3se"] = all_within;
  RunOutput out;
  out.csv["results.csv"] = csv.str();
  out.results = results;
  return out;
}

using Runner = RunOutput (*)(const Params&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table{
      {"sample-order", run_sample_order}, {"successor-orbit", run_successor_orbit},
      {"wf-sim", run_wf_sim},             {"donnelly-scan", run_donnelly},
      {"census", run_census},             {"evolve-split", run_evolve_split},
      {"cascade", run_cascade},           {"lemma-oracle", run_lemma_oracle},
      {"imperfection", run_imperfection}, {"exact-oracle", run_exact_oracle},
  };
  return table;
}

std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, keys] : schemas()) out.push_back(name);
    return out;
  }();
  return names;
}

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, config] : recipes()) out.push_back(name);
    return out;
  }();
  return names;
}

ExperimentConfig recipe(const std::string& name) {
  const auto it = recipes().find(name);
  if (it == recipes().end()) {
    std::string known;
    for (const auto& r : recipe_names()) known += "\n  " + r;
    throw ConfigError("unknown recipe '" + name + "'; known recipes:" + known);
  }
  return it->second;
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig config;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty()) throw ConfigError("config sections are not supported: " + item.fullname());
    std::string value;
    for (const auto& input : item.inputs) value += (value.empty() ? "" : ",") + strip_quotes(input);
    if (item.name == "experiment") {
      config.experiment = value;
    } else {
      if (config.values.count(item.name)) throw ConfigError("duplicate key '" + item.name + "'");
      config.values[item.name] = value;
    }
  }
  return config;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string format_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "experiment = \"" << config.experiment << "\"\n";
  for (const auto& [key, value] : config.values) out << key << " = \"" << value << "\"\n";
  return out.str();
}

ExperimentConfig resolve(const ExperimentConfig& config) {
  const auto it = schemas().find(config.experiment);
  if (it == schemas().end()) {
    std::string known;
    for (const auto& name : experiment_names()) known += " " + name;
    throw ConfigError("unknown experiment '" + config.experiment + "'; known:" + known);
  }
  ExperimentConfig resolved{config.experiment, {}};
  for (const auto& [key, value] : config.values) {
    const bool known = std::any_of(it->second.begin(), it->second.end(), [&](const Key& k) { return k.name == key; });
    if (!known) throw ConfigError("unknown key '" + key + "' for experiment " + config.experiment);
  }
  for (const auto& key : it->second) {
    const auto given = config.values.find(key.name);
    if (given != config.values.end()) {
      resolved.values[key.name] = given->second;
    } else if (key.fallback) {
      resolved.values[key.name] = *key.fallback;
    } else {
      throw ConfigError("missing required key '" + key.name + "'");
    }
  }
  Params(resolved).seed();  // validates the seed
  return resolved;
}

std::string config_hash(const ExperimentConfig& resolved) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : format_config(resolved)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

RunOutput run_experiment(const ExperimentConfig& resolved) {
  const Params params(resolved);
  auto out = runners().at(resolved.experiment)(params);
  out.events.insert(out.events.begin(), json{{"event", "start"}, {"experiment", resolved.experiment}, {"seed", params.seed()}});
  out.events.push_back(json{{"event", "finish"}, {"status", "ok"}});
  return out;
}

void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& resolved, const RunOutput& output) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, contents] : output.csv) {
    std::ofstream(dir / name, std::ios::binary) << contents;
  }
  json config = json::object();
  for (const auto& [key, value] : resolved.values) config[key] = value;
  json summary{{"experiment", resolved.experiment},
               {"version", BRATTELI_VERSION},
               {"seed", Params(resolved).seed()},
               {"config_hash", config_hash(resolved)},
               {"config", config},
               {"results", output.results}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  std::ofstream events(dir / "events.jsonl");
  for (const auto& event : output.events) events << event.dump() << '\n';
}

// ---------------------------------------------------------------------------

int main_entry(int argc, char** argv) {
  CLI::App app{"Randomly ordered Bratteli diagrams: simulation and exact verification"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "Worker threads (default: BRATTELI_WORKERS or all cores)");

  auto* run = app.add_subcommand(
      "run", "Run an experiment: run [EXPERIMENT] [--config FILE] [--recipe NAME] [--out DIR] [--KEY VALUE ...]");
  run->allow_extras();
  run->positionals_at_end(false);

  auto* rec = app.add_subcommand("recipe", "Print a recipe configuration");
  std::string rec_name;
  bool list = false;
  rec->add_option("name", rec_name, "Recipe name");
  rec->add_flag("--list", list, "List recipes");

  auto* fix = app.add_subcommand("fixtures", "Print the exact oracle fixture file");
  std::string fixture_out;
  fix->add_option("--out", fixture_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (workers > 0) set_worker_count(workers);

  try {
    if (*rec) {
      if (list || rec_name.empty()) {
        for (const auto& name : recipe_names()) std::cout << name << '\n';
        return 0;
      }
      std::cout << format_config(recipe(rec_name));
      return 0;
    }
    if (*fix) {
      const auto text = generate_fixtures();
      if (fixture_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(fixture_out, std::ios::binary) << text;
      }
      return 0;
    }

    std::string experiment, config_path, recipe_name, out_dir = ".";
    std::map<std::string, std::string> overrides;
    const auto args = run->remaining();
    for (std::size_t i = 0; i < args.size(); ++i) {
      const auto& arg = args[i];
      if (arg.rfind("--", 0) != 0) {
        if (!experiment.empty()) throw ConfigError("unexpected argument '" + arg + "'");
        experiment = arg;
        continue;
      }
      auto key = arg.substr(2);
      std::string value;
      if (const auto eq = key.find('='); eq != std::string::npos) {
        value = key.substr(eq + 1);
        key = key.substr(0, eq);
      } else {
        if (i + 1 >= args.size()) throw ConfigError("option --" + key + " needs a value");
        value = args[++i];
      }
      if (key == "config") {
        config_path = value;
      } else if (key == "recipe") {
        recipe_name = value;
      } else if (key == "out") {
        out_dir = value;
      } else {
        overrides[key] = value;
      }
    }

    ExperimentConfig config;
    if (!recipe_name.empty()) config = recipe(recipe_name);
    if (!config_path.empty()) {
      const auto file = parse_config_file(config_path);
      if (!file.experiment.empty()) config.experiment = file.experiment;
      for (const auto& [key, value] : file.values) config.values[key] = value;
    }
    if (!experiment.empty()) {
      if (!config.experiment.empty() && config.experiment != experiment) {
        throw ConfigError("experiment '" + experiment + "' conflicts with '" + config.experiment + "'");
      }
      config.experiment = experiment;
    }
    for (const auto& [key, value] : overrides) config.values[key] = value;
    const auto resolved = resolve(config);
    const auto start = std::chrono::steady_clock::now();
    auto output = run_experiment(resolved);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    output.events.back()["elapsed_seconds"] = elapsed;
    write_outputs(out_dir, resolved, output);
    std::cerr << resolved.experiment << ": wrote " << out_dir << " (" << fmt(elapsed) << " s)\n";
    return 0;
  } catch (const CapExceeded& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace bratteli::cli
