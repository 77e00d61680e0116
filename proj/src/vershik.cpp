#include "bratteli/vershik.hpp"

#include <algorithm>
#include <string>

#include "bratteli/errors.hpp"
#include "bratteli/rng.hpp"

namespace bratteli {

namespace {

constexpr std::uint32_t kUnset = UINT32_MAX;

void require_levels(const Order& order, std::size_t n, std::size_t N, std::size_t N_prime) {
  if (!(n < N && N < N_prime && N_prime <= order.depth())) {
    throw ArgumentError("need n < N < N' <= order depth, got (" + std::to_string(n) + ", " + std::to_string(N) +
                        ", " + std::to_string(N_prime) + ")");
  }
}

SuccessorResult step(const Order& order, const PathPrefix& x, Extreme carry) {
  if (x.length() > order.depth()) throw ArgumentError("prefix is deeper than the order");
  validate_path(order.diagram(), x);
  const bool up = carry == Extreme::max;
  std::size_t k = 0;
  for (std::size_t i = 0; i < x.length(); ++i) {
    const auto& e = x.edges[i];
    if (up ? !order.is_max(e) : !order.is_min(e)) {
      k = i + 1;
      break;
    }
  }
  SuccessorResult result;
  if (k == 0) {
    result.extreme = true;
    return result;
  }
  const auto& pivot = x.edges[k - 1];
  const auto rank = order.rank_of(pivot);
  const auto moved = order.edge_at_rank(k, pivot.target, up ? rank + 1 : rank - 1);
  result.pivot = k;
  result.path = x;
  result.path.edges[k - 1] = make_edge(order.diagram(), k, pivot.target, moved);
  // Reset below the pivot to the opposite extreme path into the new source.
  const auto reset = up ? Extreme::min : Extreme::max;
  std::size_t current = result.path.edges[k - 1].source;
  for (std::size_t m = k - 1; m >= 1; --m) {
    result.path.edges[m - 1] = order.extreme_edge(m, current, reset);
    current = result.path.edges[m - 1].source;
  }
  return result;
}

// reach[level][v]: v has a downward path to level `bottom`.
std::vector<std::vector<bool>> reaches(const BratteliDiagram& d, std::size_t from, std::size_t bottom) {
  std::vector<std::vector<bool>> reach(bottom + 1);
  reach[bottom].assign(d.level_size(bottom), true);
  for (std::size_t level = bottom; level-- > from;) {
    reach[level].assign(d.level_size(level), false);
    const auto& f = d.incidence(level);
    for (std::size_t v = 0; v < f.rows(); ++v) {
      if (!reach[level + 1][v]) continue;
      for (std::size_t w = 0; w < f.cols(); ++w) {
        if (f.at(v, w) > 0) reach[level][w] = true;
      }
    }
  }
  return reach;
}

// Records f(key) = value; false on a contradiction.
bool constrain(std::vector<std::uint32_t>& f, std::uint32_t key, std::uint32_t value) {
  if (f[key] == kUnset) {
    f[key] = value;
    return true;
  }
  return f[key] == value;
}

// Applies the (*) constraints of pivot level K; tribe maps V_{K-1} -> V_N and
// clan maps V_{K-1} -> V_n.
bool constrain_level(const Order& order, std::size_t K, std::span<const std::uint32_t> tribe,
                     std::span<const std::uint32_t> clan, const std::vector<bool>* live,
                     std::vector<std::uint32_t>& f) {
  const auto& inc = order.diagram().incidence(K - 1);
  for (std::size_t v = 0; v < order.diagram().level_size(K); ++v) {
    if (live != nullptr && !(*live)[v]) continue;
    const auto by_rank = order.by_rank(K, v);
    for (std::size_t a = 0; a + 1 < by_rank.size(); ++a) {
      const auto low = inc.locate(v, by_rank[a]).source;
      const auto high = inc.locate(v, by_rank[a + 1]).source;
      if (!constrain(f, tribe[low], clan[high])) return false;
    }
  }
  return true;
}

}  // namespace

SuccessorResult successor(const Order& order, const PathPrefix& x) { return step(order, x, Extreme::max); }

SuccessorResult predecessor(const Order& order, const PathPrefix& x) { return step(order, x, Extreme::min); }

OrbitCheck successor_orbit(const Order& order, std::size_t level, std::size_t v) {
  OrbitCheck check;
  const auto count = path_count(order.diagram(), level, v);
  if (count > BigInt(UINT64_MAX)) throw CapExceeded("successor orbit", count, BigInt(UINT64_MAX));
  check.paths = static_cast<std::uint64_t>(count);
  auto current = extreme_path(order, level, v, Extreme::min);
  check.starts_minimal = predecessor(order, current).extreme;
  check.strictly_increasing = true;
  check.orbit_length = 1;
  while (true) {
    auto next = successor(order, current);
    if (next.extreme) break;
    if (compare_lex(order, current, next.path) != std::strong_ordering::less) check.strictly_increasing = false;
    current = std::move(next.path);
    if (++check.orbit_length > check.paths) break;
  }
  check.ends_maximal = current == extreme_path(order, level, v, Extreme::max);
  check.complete = check.orbit_length == check.paths;
  return check;
}

bool continuity_check(const Order& order, std::size_t n, std::size_t N, std::size_t N_prime) {
  require_levels(order, n, N, N_prime);
  const auto& d = order.diagram();
  const auto live = reaches(d, N + 1, N_prime);
  std::vector<std::uint32_t> f(d.level_size(N), kUnset);
  // Pivot levels at or below N leave the first N edges fixed by the prefix itself.
  for (std::size_t K = N + 1; K <= N_prime; ++K) {
    const auto tribe = tribe_map(order, N, K - 1);
    const auto clan = clan_map(order, n, K - 1);
    if (!constrain_level(order, K, tribe, clan, &live[K], f)) return false;
  }
  return true;
}

std::optional<std::vector<std::uint32_t>> find_star_map(const Order& order, std::size_t n, std::size_t N,
                                                        std::size_t N_prime) {
  require_levels(order, n, N, N_prime);
  const auto tribe = tribe_map(order, N, N_prime - 1);
  const auto clan = clan_map(order, n, N_prime - 1);
  std::vector<std::uint32_t> f(order.diagram().level_size(N), kUnset);
  if (!constrain_level(order, N_prime, tribe, clan, nullptr, f)) return std::nullopt;
  for (auto& value : f) {
    if (value == kUnset) value = 0;
  }
  return f;
}

bool star_condition_at(const Order& order, std::span<const std::uint32_t> f, std::size_t n, std::size_t N,
                       std::size_t N_prime, std::size_t v) {
  require_levels(order, n, N, N_prime);
  if (f.size() != order.diagram().level_size(N)) throw ArgumentError("f must be defined on all of V_N");
  const auto tribe = tribe_map(order, N, N_prime - 1);
  const auto clan = clan_map(order, n, N_prime - 1);
  const auto& inc = order.diagram().incidence(N_prime - 1);
  const auto by_rank = order.by_rank(N_prime, v);
  for (std::size_t a = 0; a + 1 < by_rank.size(); ++a) {
    const auto low = inc.locate(v, by_rank[a]).source;
    const auto high = inc.locate(v, by_rank[a + 1]).source;
    if (f[tribe[low]] != clan[high]) return false;
  }
  return true;
}

std::size_t clan_count(const Order& order, std::size_t n, std::size_t level) {
  if (level == n) return order.diagram().level_size(n);
  auto clan = clan_map(order, n, level);
  std::sort(clan.begin(), clan.end());
  return static_cast<std::size_t>(std::unique(clan.begin(), clan.end()) - clan.begin());
}

ImperfectionProbe probe_imperfection(const Order& order, std::size_t n, std::size_t N, std::size_t N_prime) {
  require_levels(order, n, N, N_prime);
  ImperfectionProbe probe;
  probe.n = n;
  probe.N = N;
  probe.N_prime = N_prime;
  probe.clan_count_at = clan_count(order, n, N_prime - 1);
  probe.in_C = continuity_check(order, n, N, N_prime);
  probe.in_D = probe.clan_count_at >= 2;
  if (probe.in_D) probe.star_map = find_star_map(order, n, N, N_prime);
  probe.in_E = probe.star_map.has_value();
  return probe;
}

std::optional<Rational> imperfection_bound(const BratteliDiagram& diagram, std::size_t n, std::size_t N,
                                           std::size_t N_prime, const Rational& p_D) {
  if (!(n < N && N < N_prime && N_prime < diagram.depth())) throw ArgumentError("need n < N < N' within the diagram");
  const auto top = pow_big(BigInt(diagram.level_size(n)), static_cast<unsigned>(diagram.level_size(N)));
  const auto base = BigInt(diagram.level_size(N_prime - 1)) - 1;
  if (base == 0) {
    if (p_D == 0) return Rational(0);
    return std::nullopt;
  }
  const auto bottom = pow_big(base, static_cast<unsigned>(diagram.level_size(N_prime)));
  return Rational(top) * p_D / Rational(bottom);
}

EProbabilityEstimate estimate_E_probability(const BratteliDiagram& diagram, std::size_t n, std::size_t N,
                                            std::size_t N_prime, std::uint64_t trials, std::uint64_t seed,
                                            const EstimateOptions& options) {
  if (N_prime >= diagram.depth()) throw ArgumentError("N' exceeds the diagram depth");
  for (std::size_t level = 0; level < N_prime; ++level) {
    if (diagram.incidence(level).min_entry() == 0) {
      throw PreconditionError("diagram is not completely connected: incidence matrix " + std::to_string(level) +
                              " has a zero entry");
    }
  }
  EProbabilityEstimate estimate;
  estimate.trials = trials;
  estimate.trial_in_D.assign(trials, 0);
  estimate.trial_in_E.assign(trials, 0);
  for_each_trial(trials, options.execution, [&](std::size_t t) {
    const auto order = sample_order(diagram, rng::trial_seed(seed, t), N_prime);
    const auto probe = probe_imperfection(order, n, N, N_prime);
    estimate.trial_in_D[t] = probe.in_D;
    estimate.trial_in_E[t] = probe.in_E;
  });
  for (std::uint64_t t = 0; t < trials; ++t) {
    estimate.in_D += estimate.trial_in_D[t];
    estimate.in_E += estimate.trial_in_E[t];
  }
  estimate.empirical_p = trials > 0 ? static_cast<double>(estimate.in_E) / static_cast<double>(trials) : 0.0;
  estimate.ci = stats::wilson_interval(estimate.in_E, trials);
  const auto bound = imperfection_bound(diagram, n, N, N_prime);
  estimate.analytic_bound = bound && *bound < 1 ? *bound : Rational(1);

  if (options.exact_when_enumerable && order_space_size(diagram, N_prime) <= kOrderEnumerationCap) {
    OrderEnumerator orders(diagram, N_prime);
    std::uint64_t hits = 0;
    do {
      hits += probe_imperfection(orders.current(), n, N, N_prime).in_E;
    } while (orders.next());
    estimate.exact_p = Rational(hits) / Rational(orders.total());
  }
  return estimate;
}

}  // namespace bratteli
