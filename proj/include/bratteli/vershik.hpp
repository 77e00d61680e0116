#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bratteli/ordering.hpp"
#include "bratteli/parallel.hpp"
#include "bratteli/rational.hpp"
#include "bratteli/stats.hpp"

namespace bratteli {

/// Successor or predecessor of a finite prefix. `path` is empty and `pivot` is 0
/// when the prefix is extreme (MAXIMAL for successor, MINIMAL for predecessor).
struct SuccessorResult {
  bool extreme = false;
  PathPrefix path;
  std::size_t pivot = 0;  // 1-based level whose edge moved
};

/// A prefix is MAXIMAL when every one of its edges is ω-maximal.
SuccessorResult successor(const Order& order, const PathPrefix& x);
SuccessorResult predecessor(const Order& order, const PathPrefix& x);

struct OrbitCheck {
  std::uint64_t paths = 0;         // |E(v_0, v)|
  std::uint64_t orbit_length = 0;  // prefixes visited, including both ends
  bool starts_minimal = false;
  bool strictly_increasing = false;
  bool ends_maximal = false;
  bool complete = false;  // orbit_length == paths

  bool ok() const noexcept { return starts_minimal && strictly_increasing && ends_maximal && complete; }
};

/// Iterates successor from the ω-minimal prefix into (level, v) until MAXIMAL.
OrbitCheck successor_orbit(const Order& order, std::size_t level, std::size_t v);

/// Finite-depth C_{n,N}: non-maximal length-N' prefixes agreeing to level N have
/// successors agreeing to level n. Decided through tribes and clans.
bool continuity_check(const Order& order, std::size_t n, std::size_t N, std::size_t N_prime);

/// A map f: V_N -> V_n satisfying condition (*) at every v in V_{N'}, built by
/// constraint propagation. Points without a constraint map to 0.
std::optional<std::vector<std::uint32_t>> find_star_map(const Order& order, std::size_t n, std::size_t N,
                                                        std::size_t N_prime);

/// Condition (*) for the given f at one vertex v of V_{N'}.
bool star_condition_at(const Order& order, std::span<const std::uint32_t> f, std::size_t n, std::size_t N,
                       std::size_t N_prime, std::size_t v);

/// Number of distinct n-clans among the vertices of V_level.
std::size_t clan_count(const Order& order, std::size_t n, std::size_t level);

struct ImperfectionProbe {
  std::size_t n = 0;
  std::size_t N = 0;
  std::size_t N_prime = 0;
  std::size_t clan_count_at = 0;  // distinct n-clans among V_{N'-1}
  std::optional<std::vector<std::uint32_t>> star_map;  // present exactly when in_E
  bool in_C = false;
  bool in_D = false;
  bool in_E = false;
};

ImperfectionProbe probe_imperfection(const Order& order, std::size_t n, std::size_t N, std::size_t N_prime);

/// |V_n|^{|V_N|} p_D / (|V_{N'-1}| - 1)^{|V_{N'}|}, uncapped. Infinite (nullopt)
/// when |V_{N'-1}| = 1 and p_D > 0.
std::optional<Rational> imperfection_bound(const BratteliDiagram& diagram, std::size_t n, std::size_t N,
                                           std::size_t N_prime, const Rational& p_D = 1);

struct EProbabilityEstimate {
  std::uint64_t trials = 0;
  std::uint64_t in_D = 0;
  std::uint64_t in_E = 0;
  double empirical_p = 0.0;
  stats::Interval ci;
  Rational analytic_bound;  // with P(D) = 1, capped at 1
  std::vector<std::uint8_t> trial_in_D;
  std::vector<std::uint8_t> trial_in_E;
  /// Exact P(E) over every order, when the order space fits the enumeration cap
  /// and exact evaluation was requested.
  std::optional<Rational> exact_p;
};

struct EstimateOptions {
  Execution execution = Execution::parallel;
  bool exact_when_enumerable = false;
};

/// Monte Carlo P(E_{n,N,N'}); trial t uses the order seeded by trial_seed(seed, t).
/// Refuses diagrams that are not completely connected up to level N'.
EProbabilityEstimate estimate_E_probability(const BratteliDiagram& diagram, std::size_t n, std::size_t N,
                                            std::size_t N_prime, std::uint64_t trials, std::uint64_t seed,
                                            const EstimateOptions& options = {});

}  // namespace bratteli
