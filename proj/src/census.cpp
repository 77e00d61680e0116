#include "bratteli/census.hpp"

#include <cmath>
#include <stdexcept>

#include "bratteli/errors.hpp"
#include "bratteli/rng.hpp"

namespace bratteli {

namespace {

bool all_ones(const IncidenceMatrix& f) {
  return (f.is_uniform() && *f.uniform_value() == 1) || (f.max_entry() == 1 && f.min_entry() == 1);
}

std::uint64_t set_size(const VertexSet& A) {
  std::uint64_t size = 0;
  for (const auto x : A) size += x != 0;
  return size;
}

std::string bits(std::uint64_t label, std::size_t length) {
  std::string s(length, '0');
  for (std::size_t i = 0; i < length; ++i) {
    if ((label >> (length - 1 - i)) & 1U) s[i] = '1';
  }
  return s;
}

Rational round_down(double x, std::int64_t denominator) {
  return Rational(static_cast<std::int64_t>(std::floor(x * static_cast<double>(denominator))), denominator);
}

}  // namespace

// ---------------------------------------------------------------------------

JEstimate estimate_j(const BratteliDiagram& diagram, std::size_t k, std::span<const std::size_t> depths,
                     std::uint64_t trials, std::uint64_t seed, Execution exec) {
  if (depths.empty()) throw ArgumentError("estimate_j needs at least one depth");
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (depths[i] <= k || (i > 0 && depths[i] <= depths[i - 1])) {
      throw ArgumentError("depths must increase and exceed the base level");
    }
  }
  if (depths.back() >= diagram.depth()) throw ArgumentError("depth exceeds the diagram");
  JEstimate out;
  out.k = k;
  out.depths.assign(depths.begin(), depths.end());
  out.counts.assign(trials, std::vector<std::uint32_t>(depths.size(), 0));
  for_each_trial(trials, exec, [&](std::size_t t) {
    const SeededOrder order(diagram, rng::trial_seed(seed, t));
    std::vector<std::uint32_t> current(diagram.level_size(k));
    for (std::size_t v = 0; v < current.size(); ++v) current[v] = static_cast<std::uint32_t>(v);
    std::vector<std::uint32_t> next;
    std::vector<std::uint8_t> seen(current.size());
    std::size_t slot = 0;
    std::uint32_t distinct = static_cast<std::uint32_t>(current.size());
    for (std::size_t m = k + 1; m <= depths.back() && slot < depths.size(); ++m) {
      if (distinct > 1) {
        next.resize(diagram.level_size(m));
        for (std::size_t v = 0; v < next.size(); ++v) next[v] = current[order.max_source(m, v)];
        current.swap(next);
        std::fill(seen.begin(), seen.end(), 0);
        distinct = 0;
        for (const auto tribe : current) {
          if (!seen[tribe]) {
            seen[tribe] = 1;
            ++distinct;
          }
        }
      }
      if (m == depths[slot]) out.counts[t][slot++] = distinct;
    }
  });
  out.histogram.assign(depths.size(), std::vector<std::uint64_t>(diagram.level_size(k) + 1, 0));
  for (const auto& row : out.counts) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      ++out.histogram[i][row[i]];
      if (i > 0 && row[i] > row[i - 1]) out.monotone = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

EquitabilityReport check_equitable(const BratteliDiagram& diagram, std::size_t n, const VertexSet& A,
                                   const Rational& beta, const Rational& eps) {
  if (n + 1 >= diagram.depth()) throw ArgumentError("equitability at level n needs level n+1");
  if (A.size() != diagram.level_size(n)) throw ArgumentError("set must be a membership vector over V_n");
  const auto& f = diagram.incidence(n);
  EquitabilityReport report;
  report.level = n;
  report.set_size = set_size(A);
  report.beta = beta;
  report.eps = eps;
  report.worst_deviation = -1;
  auto consider = [&](std::size_t v, std::uint64_t i, std::uint64_t hits, std::uint64_t size) {
    if (size == 0) return;
    const auto deviation = abs_value(Rational(hits, size) - beta);
    if (deviation > report.worst_deviation) {
      report.worst_deviation = deviation;
      report.worst_vertex = v;
      report.worst_class = i;
    }
  };
  if (f.is_uniform()) {
    if (*f.uniform_value() > 0) consider(0, *f.uniform_value(), report.set_size, f.cols());
  } else {
    std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> classes;  // i -> (|A ∩ V^{v,i}|, |V^{v,i}|)
    for (std::size_t v = 0; v < f.rows(); ++v) {
      classes.clear();
      for (std::size_t w = 0; w < f.cols(); ++w) {
        const auto i = f.at(v, w);
        if (i == 0) continue;
        auto& [hits, size] = classes[i];
        hits += A[w] != 0;
        ++size;
      }
      for (const auto& [i, counts] : classes) consider(v, i, counts.first, counts.second);
    }
  }
  if (report.worst_deviation < 0) report.worst_deviation = 0;
  report.pass = report.worst_deviation <= eps;
  return report;
}

Rational inclusion_probability(const BratteliDiagram& diagram, std::size_t n, const VertexSet& A, std::size_t v) {
  if (A.size() != diagram.level_size(n)) throw ArgumentError("set must be a membership vector over V_n");
  const auto& f = diagram.incidence(n);
  BigInt hits = 0;
  BigInt total = 0;
  for (std::size_t w = 0; w < f.cols(); ++w) {
    const auto e = f.at(v, w);
    total += e;
    if (A[w]) hits += e;
  }
  return Rational(hits, total);
}

HoeffdingBounds hoeffding_bounds(const Impartiality& impartial, std::uint64_t size_n, std::uint64_t size_next,
                                 double eps) {
  const double alpha = to_double(impartial.alpha);
  const double prefactor = 2.0 * static_cast<double>(impartial.r) * static_cast<double>(size_next);
  const double exponent = alpha * static_cast<double>(size_n) * eps * eps;
  return HoeffdingBounds{prefactor * std::exp(-2.0 * exponent), prefactor * std::exp(-exponent)};
}

VertexSet random_half_subset(std::size_t size, std::uint64_t seed, std::uint64_t attempt) {
  rng::CounterStream stream(rng::derive(seed ^ rng::kSubsetTag, attempt));
  VertexSet A(size);
  std::uint64_t word = 0;
  for (std::size_t w = 0; w < size; ++w) {
    if (w % 64 == 0) word = stream.next();
    A[w] = static_cast<std::uint8_t>((word >> (w % 64)) & 1U);
  }
  return A;
}

namespace {

Impartiality require_impartial(const BratteliDiagram& diagram, std::size_t n) {
  if (n + 1 >= diagram.depth()) throw ArgumentError("level n+1 is not stored");
  const auto c = classify(diagram.truncated(n + 2), {});
  if (!c.impartial) {
    throw PreconditionError("diagram is not impartial: " + (c.not_impartial ? c.not_impartial->reason : std::string()));
  }
  return *c.impartial;
}

}  // namespace

EquitableSearch find_equitable_set(const BratteliDiagram& diagram, std::size_t n, const Rational& eps,
                                   std::uint64_t attempts, std::uint64_t seed) {
  const auto impartial = require_impartial(diagram, n);
  EquitableSearch out;
  out.bounds = hoeffding_bounds(impartial, diagram.level_size(n), diagram.level_size(n + 1), to_double(eps));
  for (std::uint64_t a = 0; a < attempts; ++a) {
    auto A = random_half_subset(diagram.level_size(n), seed, a);
    out.attempts_used = a + 1;
    if (check_equitable(diagram, n, A, Rational(1, 2), eps).pass) {
      out.set = std::move(A);
      break;
    }
  }
  return out;
}

FailureRate equitability_failure_rate(const BratteliDiagram& diagram, std::size_t n, const Rational& eps,
                                      std::uint64_t samples, std::uint64_t seed, Execution exec) {
  const auto impartial = require_impartial(diagram, n);
  FailureRate out;
  out.samples = samples;
  out.bounds = hoeffding_bounds(impartial, diagram.level_size(n), diagram.level_size(n + 1), to_double(eps));
  out.reports.resize(samples);
  for_each_trial(samples, exec, [&](std::size_t t) {
    const auto A = random_half_subset(diagram.level_size(n), seed, t);
    out.reports[t] = check_equitable(diagram, n, A, Rational(1, 2), eps);
  });
  for (const auto& report : out.reports) out.failures += !report.pass;
  out.rate = samples > 0 ? static_cast<double>(out.failures) / static_cast<double>(samples) : 0.0;
  out.within_weak_bound = out.rate <= out.bounds.weak;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> greedy_schedule(std::span<const std::uint64_t> sizes, std::size_t K, double kappa) {
  if (sizes.empty()) return {};
  const std::size_t last = sizes.size() - 1;
  // tail[n] = sum_{j=n+1}^{last} 1/(4 M_j)
  std::vector<double> tail(sizes.size() + 1, 0.0);
  for (std::size_t n = last; n-- > 0;) tail[n] = tail[n + 1] + 1.0 / (4.0 * static_cast<double>(sizes[n + 1]));
  std::vector<std::size_t> schedule{0};
  for (std::size_t k = 1; k <= K; ++k) {
    const double quarter = std::pow(4.0, static_cast<double>(k));
    const double budget = kappa / quarter * std::pow(4.0, -2.0 * static_cast<double>(k + 1));
    std::optional<std::size_t> found;
    for (std::size_t n = schedule.back() + 1; n <= last; ++n) {
      if (static_cast<double>(sizes[n]) <= quarter) continue;
      if (k < K && !(tail[n] < budget)) continue;
      found = n;
      break;
    }
    if (!found) return {};
    schedule.push_back(*found);
  }
  return schedule;
}

SplitFamily evolve_and_split(const BratteliDiagram& diagram, std::uint64_t seed, std::span<const std::size_t> schedule,
                             double kappa) {
  if (schedule.empty() || schedule[0] != 0) throw ArgumentError("schedule must start at level 0");
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    if (schedule[k] <= schedule[k - 1]) throw ArgumentError("schedule must be strictly increasing");
  }
  if (schedule.back() >= diagram.depth()) throw ArgumentError("schedule exceeds the diagram depth");
  for (std::size_t m = 0; m < schedule.back(); ++m) {
    if (!all_ones(diagram.incidence(m))) {
      throw PreconditionError("evolve-and-split needs all-ones incidence; matrix " + std::to_string(m) + " is not");
    }
  }
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    if (BigInt(diagram.level_size(schedule[k])) <= pow_big(BigInt(4), static_cast<unsigned>(k))) {
      throw PreconditionError("schedule violates M_{n_k} > 4^k at k = " + std::to_string(k) + " (level " +
                              std::to_string(schedule[k]) + ")");
    }
  }
  SplitFamily family;
  family.seed = seed;
  family.schedule.assign(schedule.begin(), schedule.end());
  family.kappa = kappa;
  family.sets[""] = {0};
  const std::size_t K = family.K();
  if (K == 0) {
    family.good = true;
    return family;
  }
  const SeededOrder order(diagram, seed);
  // Every vertex of V_{n_1} descends from the root, so the first step needs no draws.
  std::vector<std::uint32_t> labels(diagram.level_size(schedule[1]), 0);
  family.checks.push_back(SplitCheck{"", 1, labels.size(), Rational(0), Rational(1, 4), true});
  std::vector<std::uint32_t> next;
  bool good = true;
  for (std::size_t k = 1; k <= K; ++k) {
    // Split: labels hold strings of length k-1; relabel to length k.
    const std::size_t strings = std::size_t{1} << (k - 1);
    std::vector<std::uint64_t> sizes(strings, 0);
    for (const auto label : labels) ++sizes[label];
    std::vector<std::uint64_t> seen(strings, 0);
    for (std::size_t v = 0; v < labels.size(); ++v) {
      const auto s = labels[v];
      const bool first_half = seen[s]++ < (sizes[s] + 1) / 2;
      labels[v] = 2 * s + (first_half ? 0 : 1);
    }
    std::vector<std::vector<std::uint32_t>> members(2 * strings);
    for (std::size_t v = 0; v < labels.size(); ++v) members[labels[v]].push_back(static_cast<std::uint32_t>(v));
    for (std::size_t s = 0; s < members.size(); ++s) family.sets[bits(s, k)] = members[s];
    if (k == K) break;

    // Evolve to n_{k+1} and compare densities.
    for (std::size_t m = schedule[k] + 1; m <= schedule[k + 1]; ++m) {
      next.resize(diagram.level_size(m));
      for (std::size_t v = 0; v < next.size(); ++v) next[v] = labels[order.max_source(m, v)];
      labels.swap(next);
    }
    std::vector<std::uint64_t> evolved(members.size(), 0);
    for (const auto label : labels) ++evolved[label];
    const Rational bound(1, pow_big(BigInt(4), static_cast<unsigned>(k + 1)));
    for (std::size_t s = 0; s < members.size(); ++s) {
      SplitCheck check;
      check.s = bits(s, k);
      check.parent_size = members[s].size();
      check.evolved_size = evolved[s];
      check.deviation = abs_value(Rational(evolved[s], labels.size()) -
                                  Rational(members[s].size(), diagram.level_size(schedule[k])));
      check.bound = bound;
      check.pass = check.deviation < bound;
      good = good && check.pass;
      family.checks.push_back(std::move(check));
    }
  }
  family.good = good;
  if (good) {
    for (const auto& [s, members] : family.sets) {
      if (members.empty()) throw std::logic_error("good split family has an empty set A_" + s);
    }
  }
  return family;
}

std::string iota_prefix(const BratteliDiagram& diagram, const SplitFamily& family, std::size_t v) {
  if (!family.good) throw PreconditionError("iota is defined only for good split families");
  const std::size_t K = family.K();
  if (K == 0) return {};
  const auto& schedule = family.schedule;
  if (v >= diagram.level_size(schedule[K])) throw ArgumentError("vertex out of range at level n_K");
  std::vector<std::size_t> ancestors(K + 1, 0);
  const SeededOrder order(diagram, family.seed);
  std::size_t current = v;
  std::size_t k = K;
  for (std::size_t m = schedule[K];; --m) {
    if (m == schedule[k]) {
      ancestors[k] = current;
      if (k == 1) break;
      --k;
    }
    current = order.max_source(m, current);
  }
  std::string s;
  for (std::size_t level = 1; level <= K; ++level) {
    std::optional<char> bit;
    for (const char c : {'0', '1'}) {
      const auto it = family.sets.find(s + c);
      if (it == family.sets.end()) continue;
      if (std::binary_search(it->second.begin(), it->second.end(), static_cast<std::uint32_t>(ancestors[level]))) {
        bit = c;
      }
    }
    if (!bit) throw ArgumentError("tribe of the vertex at level " + std::to_string(schedule[level]) + " leaves A_" + s);
    s += *bit;
  }
  return s;
}

SplitTrials evolve_and_split_trials(const BratteliDiagram& diagram, std::span<const std::size_t> schedule, double kappa,
                                    std::uint64_t trials, std::uint64_t seed, Execution exec) {
  SplitTrials out;
  out.trials.resize(trials);
  const std::size_t K = schedule.empty() ? 0 : schedule.size() - 1;
  for_each_trial(trials, exec, [&](std::size_t t) {
    const auto family = evolve_and_split(diagram, rng::trial_seed(seed, t), schedule, kappa);
    SplitSummary summary;
    summary.good = family.good;
    summary.all_nonempty = true;
    summary.tribes_hit_all = family.good;
    summary.smallest_leaf = UINT64_MAX;
    for (const auto& [s, members] : family.sets) {
      if (members.empty()) summary.all_nonempty = false;
      if (s.size() != K) continue;
      summary.smallest_leaf = std::min<std::uint64_t>(summary.smallest_leaf, members.size());
      if (family.good && (members.empty() || iota_prefix(diagram, family, members.front()) != s)) {
        summary.tribes_hit_all = false;
      }
    }
    out.trials[t] = summary;
  });
  for (const auto& s : out.trials) {
    out.good += s.good;
    out.good_and_surjective += s.good && s.all_nonempty && s.tribes_hit_all;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Rational> default_eps_sequence(double delta, std::size_t N, std::size_t last, double tail) {
  if (N == 0 || last < N) throw ArgumentError("eps sequence needs 1 <= N <= last");
  const double s = 1.0 + delta / 3.0;
  constexpr std::size_t kTerms = 1'000'000;
  double sum = 0.0;
  for (std::size_t j = std::max(N, kTerms); j-- > N;) sum += std::pow(static_cast<double>(j), -s);
  sum += std::pow(static_cast<double>(std::max(N, kTerms)) - 0.5, 1.0 - s) / (s - 1.0);
  const double c = tail / sum;
  std::vector<Rational> eps;
  for (std::size_t j = N; j <= last; ++j) eps.push_back(round_down(c * std::pow(static_cast<double>(j), -s), 1'000'000'000'000));
  return eps;
}

void check_cascade_preconditions(const BratteliDiagram& diagram, std::size_t N, std::span<const Rational> eps,
                                 const VertexSet& A_N) {
  const auto deltas = default_delta_candidates();
  const auto c = classify(diagram, deltas);
  if (!c.impartial) throw PreconditionError("cascade needs an impartial diagram");
  if (!c.superquadratic) throw PreconditionError("cascade needs a superquadratic diagram");
  if (!c.exponentially_bounded) throw PreconditionError("cascade needs an exponentially bounded diagram");
  if (eps.empty()) throw PreconditionError("cascade needs eps_N");
  Rational total = 0;
  for (const auto& e : eps) {
    if (e <= 0) throw PreconditionError("eps values must be positive");
    total += e;
  }
  if (!(total < Rational(1, 2))) throw PreconditionError("cascade needs sum of eps_j past N below 1/2");
  if (!check_equitable(diagram, N, A_N, Rational(1, 2), eps[0]).pass) {
    throw PreconditionError("starting set is not eps_N-equitable");
  }
}

CascadeTrace equitability_cascade(const BratteliDiagram& diagram, std::uint64_t seed, std::size_t N,
                                  std::span<const Rational> eps, std::size_t depth, const VertexSet& A_N) {
  if (depth >= diagram.depth() || depth <= N) throw ArgumentError("cascade needs N < depth within the diagram");
  if (eps.size() < depth - N) throw ArgumentError("eps must cover levels N..depth-1");
  if (A_N.size() != diagram.level_size(N)) throw ArgumentError("starting set must cover V_N");
  const auto impartial = require_impartial(diagram, N);
  const SeededOrder order(diagram, seed);
  CascadeTrace trace;
  VertexSet current = A_N;
  VertexSet next;
  Rational delta = 0;
  for (std::size_t m = N; m < depth; ++m) {
    if (m > N) {
      next.resize(diagram.level_size(m));
      for (std::size_t v = 0; v < next.size(); ++v) next[v] = current[order.max_source(m, v)];
      current.swap(next);
    }
    delta += eps[m - N];
    const auto report = check_equitable(diagram, m, current, Rational(1, 2), delta);
    CascadeLevel level;
    level.level = m;
    level.set_size = report.set_size;
    level.delta = delta;
    level.deviation = report.worst_deviation;
    level.pass = report.pass;
    if (m > N) {
      level.failure_bound =
          hoeffding_bounds(impartial, diagram.level_size(m), diagram.level_size(m + 1), to_double(eps[m - N])).strong;
    }
    trace.levels.push_back(std::move(level));
    if (!report.pass) {
      trace.first_failure = m;
      return trace;
    }
  }
  trace.success = true;
  return trace;
}

double cascade_success_bound(const BratteliDiagram& diagram, std::size_t N, std::span<const Rational> eps,
                             std::size_t depth) {
  const auto impartial = require_impartial(diagram, N);
  double product = 1.0;
  for (std::size_t m = N + 1; m < depth; ++m) {
    const auto bound = hoeffding_bounds(impartial, diagram.level_size(m), diagram.level_size(m + 1), to_double(eps[m - N]));
    product *= std::max(0.0, 1.0 - bound.strong);
  }
  return product;
}

CascadeTrials equitability_cascade_trials(const BratteliDiagram& diagram, std::size_t N, std::span<const Rational> eps,
                                          std::size_t depth, const VertexSet& A_N, std::uint64_t trials,
                                          std::uint64_t seed, Execution exec) {
  check_cascade_preconditions(diagram, N, eps, A_N);
  CascadeTrials out;
  out.trials.resize(trials);
  for_each_trial(trials, exec, [&](std::size_t t) {
    out.trials[t] = equitability_cascade(diagram, rng::trial_seed(seed, t), N, eps, depth, A_N);
  });
  for (const auto& trace : out.trials) out.successes += trace.success;
  out.success_bound = cascade_success_bound(diagram, N, eps, depth);
  return out;
}

}  // namespace bratteli
