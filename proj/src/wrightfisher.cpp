#include "bratteli/wrightfisher.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "bratteli/errors.hpp"
#include "bratteli/ordering.hpp"
#include "bratteli/rng.hpp"
#include "bratteli/stats.hpp"

namespace bratteli {

namespace {

void require_sizes(std::span<const std::uint64_t> sizes, std::size_t k, std::size_t depth) {
  if (sizes.empty() || sizes[0] != 1) throw ArgumentError("level sizes must start with the root size 1");
  if (depth >= sizes.size()) throw ArgumentError("depth " + std::to_string(depth) + " exceeds the level sizes");
  if (k > depth) throw ArgumentError("start level exceeds depth");
  for (std::size_t n = 0; n <= depth; ++n) {
    if (sizes[n] == 0) throw ArgumentError("level " + std::to_string(n) + " is empty");
  }
}

class LabelCounter {
 public:
  std::uint32_t distinct(std::span<const std::uint32_t> labels) {
    ++stamp_;
    std::uint32_t count = 0;
    for (const auto label : labels) {
      if (label >= seen_.size()) seen_.resize(static_cast<std::size_t>(label) + 1, 0);
      if (seen_[label] != stamp_) {
        seen_[label] = stamp_;
        ++count;
      }
    }
    return count;
  }

 private:
  std::vector<std::uint64_t> seen_;
  std::uint64_t stamp_ = 0;
};

}  // namespace

double Frequency::q_double() const {
  const double y = as_double();
  return y * (1.0 - y);
}

AlleleState propagate(const BratteliDiagram& diagram, std::uint64_t seed, const AlleleState& initial,
                      std::size_t to_level, Inheritance mode) {
  if (to_level < initial.level || to_level >= diagram.depth()) throw ArgumentError("target level out of range");
  if (initial.alleles.size() != diagram.level_size(initial.level)) {
    throw ArgumentError("initial state needs one label per vertex of level " + std::to_string(initial.level));
  }
  if (mode == Inheritance::uniform) {
    for (std::size_t m = initial.level; m < to_level; ++m) {
      const auto& f = diagram.incidence(m);
      if (!(f.is_uniform() && *f.uniform_value() == 1) && !(f.max_entry() == 1 && f.min_entry() == 1)) {
        throw PreconditionError("uniform inheritance needs all-ones incidence; matrix " + std::to_string(m) +
                                " is not all ones");
      }
    }
  }
  const SeededOrder order(diagram, seed);
  AlleleState state = initial;
  std::vector<std::uint32_t> next;
  for (std::size_t m = initial.level + 1; m <= to_level; ++m) {
    next.resize(diagram.level_size(m));
    for (std::size_t v = 0; v < next.size(); ++v) next[v] = state.alleles[order.max_source(m, v)];
    state.alleles.swap(next);
    state.level = m;
  }
  return state;
}

Trajectory run_trial(std::span<const std::uint64_t> sizes, std::size_t k, std::span<const std::uint32_t> labels,
                     std::uint32_t focus, std::uint64_t seed, std::size_t depth) {
  require_sizes(sizes, k, depth);
  if (labels.size() != sizes[k]) throw ArgumentError("need one label per vertex of the start level");
  LabelCounter counter;
  Trajectory run;
  run.start = k;
  run.y.reserve(depth - k + 1);
  run.surviving_labels.reserve(depth - k + 1);

  std::vector<std::uint32_t> current(labels.begin(), labels.end());
  std::vector<std::uint32_t> next;
  auto record = [&](std::size_t level, std::uint64_t count, std::uint32_t alive) {
    run.y.push_back(Frequency{count, sizes[level]});
    run.surviving_labels.push_back(alive);
    if (count == sizes[level] && !run.domination_level) run.domination_level = level;
    if (count == 0 && !run.extinction_level) run.extinction_level = level;
  };
  std::uint32_t alive = counter.distinct(current);
  record(k, static_cast<std::uint64_t>(std::count(current.begin(), current.end(), focus)), alive);
  for (std::size_t m = k + 1; m <= depth; ++m) {
    if (alive == 1) {
      // A single label is absorbing; the remaining levels need no draws.
      record(m, current[0] == focus ? sizes[m] : 0, 1);
      continue;
    }
    const auto parents = sizes[m - 1];
    next.resize(sizes[m]);
    std::uint64_t count = 0;
    for (std::size_t v = 0; v < next.size(); ++v) {
      next[v] = current[rng::first_pick(rng::vertex_key(seed, m, v), parents)];
      count += next[v] == focus;
    }
    current.swap(next);
    alive = counter.distinct(current);
    record(m, count, alive);
  }
  const auto& last = run.y.back();
  run.fixated = last.count == 0 || last.count == last.size;
  return run;
}

std::vector<Trajectory> simulate_trials(std::span<const std::uint64_t> sizes, std::size_t k,
                                        std::span<const std::uint32_t> labels, std::uint32_t focus,
                                        std::uint64_t trials, std::uint64_t master_seed, std::size_t depth,
                                        Execution exec) {
  require_sizes(sizes, k, depth);
  std::vector<Trajectory> runs(trials);
  for_each_trial(trials, exec, [&](std::size_t t) {
    runs[t] = run_trial(sizes, k, labels, focus, rng::trial_seed(master_seed, t), depth);
  });
  return runs;
}

Rational expected_q(std::span<const std::uint64_t> sizes, const Rational& q0, std::size_t n, std::size_t k) {
  if (n >= sizes.size()) throw ArgumentError("level " + std::to_string(n) + " exceeds the level sizes");
  Rational q = q0;
  for (std::size_t j = k + 1; j <= n; ++j) {
    if (sizes[j] == 0) throw ArgumentError("level sizes must be positive");
    q *= Rational(sizes[j] - 1, sizes[j]);
  }
  return q;
}

MartingaleStats martingale_stats(std::span<const std::uint64_t> sizes, const std::vector<Trajectory>& runs) {
  MartingaleStats out;
  if (runs.empty()) return out;
  const auto k = runs[0].start;
  const auto length = runs[0].y.size();
  out.y0 = runs[0].y[0].value();
  const auto q0 = runs[0].y[0].q();
  for (const auto& run : runs) {
    if (run.start != k || run.y.size() != length || run.y[0].value() != out.y0) {
      throw ArgumentError("martingale statistics need runs from one start state");
    }
  }
  const double y0 = to_double(out.y0);
  std::vector<stats::MeanAccumulator> ys(length), qs(length), sq(length), pred(length), diff(length);
  stats::MeanAccumulator pooled;
  for (const auto& run : runs) {
    double total = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
      ys[i].add(run.y[i].as_double());
      qs[i].add(run.y[i].q_double());
      if (i == 0) continue;
      const double d = run.y[i].as_double() - run.y[i - 1].as_double();
      const double predicted = run.y[i - 1].q_double() / static_cast<double>(sizes[k + i]);
      sq[i].add(d * d);
      pred[i].add(predicted);
      diff[i].add(d * d - predicted);
      total += d * d - predicted;
    }
    pooled.add(total);
  }
  constexpr double kSlack = 1e-12;
  out.martingale_ok = true;
  out.q_decay_ok = true;
  for (std::size_t i = 0; i < length; ++i) {
    LevelStats level;
    level.level = k + i;
    level.mean_y = ys[i].mean();
    level.se_y = ys[i].standard_error();
    level.mean_q = qs[i].mean();
    level.se_q = qs[i].standard_error();
    level.expected_q = expected_q(sizes, q0, k + i, k);
    level.mean_sq_increment = sq[i].mean();
    level.mean_predicted_variance = pred[i].mean();
    level.se_variance_diff = diff[i].standard_error();
    if (std::abs(level.mean_y - y0) > 3.0 * level.se_y + kSlack) out.martingale_ok = false;
    if (std::abs(level.mean_q - to_double(level.expected_q)) > 3.0 * level.se_q + kSlack) out.q_decay_ok = false;
    out.levels.push_back(std::move(level));
  }
  out.pooled_variance_diff = pooled.mean();
  out.pooled_variance_se = pooled.standard_error();
  out.variance_ok = std::abs(out.pooled_variance_diff) <= 3.0 * out.pooled_variance_se + kSlack;
  return out;
}

MartingaleStats martingale_stats(std::span<const std::uint64_t> sizes, std::size_t k,
                                 std::span<const std::uint32_t> labels, std::uint32_t focus,
                                 std::uint64_t trials, std::uint64_t seed, std::size_t depth, Execution exec) {
  return martingale_stats(sizes, simulate_trials(sizes, k, labels, focus, trials, seed, depth, exec));
}

BinomialTest binomial_transition_test(std::span<const std::uint64_t> sizes, const std::vector<Trajectory>& runs,
                                      double significance) {
  // (M_n, |S_n|, M_{n+1}) -> histogram of |S_{n+1}|
  std::map<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>, std::vector<double>> strata;
  BinomialTest out;
  for (const auto& run : runs) {
    for (std::size_t i = 0; i + 1 < run.y.size(); ++i) {
      const auto& from = run.y[i];
      if (from.count == 0 || from.count == from.size) continue;
      const auto next_size = sizes[run.start + i + 1];
      auto& histogram = strata[{from.size, from.count, next_size}];
      if (histogram.empty()) histogram.assign(next_size + 1, 0.0);
      histogram[run.y[i + 1].count] += 1.0;
      ++out.transitions;
    }
  }
  for (const auto& [key, observed] : strata) {
    const auto [m, c, next_size] = key;
    const double p = static_cast<double>(c) / static_cast<double>(m);
    double total = 0.0;
    for (const auto x : observed) total += x;
    std::vector<double> expected(observed.size());
    for (std::size_t j = 0; j < expected.size(); ++j) expected[j] = total * stats::binomial_pmf(next_size, p, j);
    const auto [chi2, cells] = stats::pearson_pooled(observed, expected);
    if (cells < 2) continue;
    out.statistic += chi2;
    out.degrees_of_freedom += cells - 1;
    ++out.strata;
  }
  out.p_value = out.degrees_of_freedom > 0 ? stats::chi_square_sf(out.statistic, static_cast<double>(out.degrees_of_freedom)) : 1.0;
  out.pass = out.p_value >= significance;
  return out;
}

std::vector<DominationPoint> donnelly_scan(std::span<const std::uint64_t> sizes, std::size_t k,
                                           std::uint64_t trials, std::uint64_t seed, std::size_t depth,
                                           Execution exec) {
  require_sizes(sizes, k, depth);
  std::vector<std::uint32_t> labels(sizes[k]);
  for (std::size_t v = 0; v < labels.size(); ++v) labels[v] = static_cast<std::uint32_t>(v);
  const auto runs = simulate_trials(sizes, k, labels, 0, trials, seed, depth, exec);
  std::vector<DominationPoint> curve;
  double reciprocal = 0.0;
  for (std::size_t j = 1; j <= k; ++j) reciprocal += 1.0 / static_cast<double>(sizes[j]);
  for (std::size_t level = k; level <= depth; ++level) {
    if (level > k) reciprocal += 1.0 / static_cast<double>(sizes[level]);
    DominationPoint point;
    point.level = level;
    for (const auto& run : runs) point.dominated += run.surviving_labels[level - k] == 1;
    point.fraction = trials > 0 ? static_cast<double>(point.dominated) / static_cast<double>(trials) : 0.0;
    point.reciprocal_sum = reciprocal;
    curve.push_back(point);
  }
  return curve;
}

}  // namespace bratteli
