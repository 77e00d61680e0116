#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/ordering.hpp"
#include "bratteli/parallel.hpp"
#include "bratteli/rational.hpp"

namespace bratteli {

/// Membership vector over V_n.
using VertexSet = std::vector<std::uint8_t>;

/// Distinct level-k tribes of the vertices of V_N, ascending.
template <class O>
std::vector<std::uint32_t> surviving_tribes(const O& order, std::size_t k, std::size_t N) {
  auto tribes = tribe_map(order, k, N);
  std::sort(tribes.begin(), tribes.end());
  tribes.erase(std::unique(tribes.begin(), tribes.end()), tribes.end());
  return tribes;
}

struct JEstimate {
  std::size_t k = 0;
  std::vector<std::size_t> depths;
  /// counts[t][i]: surviving tribe count of trial t at depths[i].
  std::vector<std::vector<std::uint32_t>> counts;
  /// histogram[i][c]: trials with count c at depths[i].
  std::vector<std::vector<std::uint64_t>> histogram;
  bool monotone = true;  // every trial non-increasing along the schedule
};

/// Trial t uses the order seeded by trial_seed(seed, t). Depths must be increasing and > k.
JEstimate estimate_j(const BratteliDiagram& diagram, std::size_t k, std::span<const std::size_t> depths,
                     std::uint64_t trials, std::uint64_t seed, Execution exec = Execution::parallel);

struct EquitabilityReport {
  std::size_t level = 0;
  std::uint64_t set_size = 0;
  Rational beta;
  Rational eps;
  Rational worst_deviation;
  std::size_t worst_vertex = 0;   // in V_{n+1}
  std::uint64_t worst_class = 0;  // multiplicity i of the worst class
  bool pass = false;              // worst_deviation <= eps
};

/// Exact (beta, eps)-equitability of A within V_n. Empty classes are skipped.
EquitabilityReport check_equitable(const BratteliDiagram& diagram, std::size_t n, const VertexSet& A,
                                   const Rational& beta, const Rational& eps);

/// Probability that the ω-maximal edge into v (at level n+1) has its source in
/// A: sum_j j|A ∩ V_n^{v,j}| / sum_j j|V_n^{v,j}|.
Rational inclusion_probability(const BratteliDiagram& diagram, std::size_t n, const VertexSet& A, std::size_t v);

struct HoeffdingBounds {
  double strong = 0.0;  // 2 r |V_{n+1}| exp(-2 alpha |V_n| eps^2)
  double weak = 0.0;    // 2 r |V_{n+1}| exp(-alpha |V_n| eps^2)
};

HoeffdingBounds hoeffding_bounds(const Impartiality& impartial, std::uint64_t size_n, std::uint64_t size_next,
                                 double eps);

/// Uniform random subset of V_n (each vertex with probability 1/2), attempt `attempt` under `seed`.
VertexSet random_half_subset(std::size_t size, std::uint64_t seed, std::uint64_t attempt);

struct EquitableSearch {
  std::optional<VertexSet> set;
  std::uint64_t attempts_used = 0;
  HoeffdingBounds bounds;
};

/// Draws random p = 1/2 subsets until one is (1/2, eps)-equitable. Refuses
/// diagrams that are not impartial up to level n+1.
EquitableSearch find_equitable_set(const BratteliDiagram& diagram, std::size_t n, const Rational& eps,
                                   std::uint64_t attempts, std::uint64_t seed);

struct FailureRate {
  std::uint64_t samples = 0;
  std::uint64_t failures = 0;
  double rate = 0.0;
  HoeffdingBounds bounds;
  bool within_weak_bound = false;
  std::vector<EquitabilityReport> reports;  // one per sample
};

/// Fraction of random p = 1/2 subsets of V_n that fail (1/2, eps)-equitability.
FailureRate equitability_failure_rate(const BratteliDiagram& diagram, std::size_t n, const Rational& eps,
                                      std::uint64_t samples, std::uint64_t seed,
                                      Execution exec = Execution::parallel);

/// n_0 = 0 and, for k >= 1, the smallest level past n_{k-1} with M_{n_k} > 4^k;
/// for 1 <= k < K additionally sum_{j > n_k} 1/(4 M_j) < kappa 4^{-k} (4^{-(k+1)})^2,
/// the sum running to the last stored level. Empty when no such schedule fits.
std::vector<std::size_t> greedy_schedule(std::span<const std::uint64_t> sizes, std::size_t K, double kappa);

struct SplitCheck {
  std::string s;
  std::uint64_t parent_size = 0;   // |A_s| at level n_k
  std::uint64_t evolved_size = 0;  // |S(A_s)| at level n_{k+1}
  Rational deviation;
  Rational bound;  // 4^{-(k+1)}
  bool pass = false;
};

struct SplitFamily {
  std::uint64_t seed = 0;
  std::vector<std::size_t> schedule;
  double kappa = 0.0;
  /// A_s for every binary string s with |s| <= K; vertices ascending.
  std::map<std::string, std::vector<std::uint32_t>> sets;
  std::vector<SplitCheck> checks;
  bool good = false;

  std::size_t K() const noexcept { return schedule.empty() ? 0 : schedule.size() - 1; }
};

/// Evolve-and-split along `schedule` (n_0 = 0 < ... < n_K) for the order seeded
/// by `seed`. Requires all-ones incidence and M_{n_k} > 4^k.
SplitFamily evolve_and_split(const BratteliDiagram& diagram, std::uint64_t seed, std::span<const std::size_t> schedule,
                             double kappa);

/// The string s with v in A_s, |s| = K, read off the tribes of v at the
/// scheduled levels. Throws PreconditionError unless the family is good and
/// ArgumentError if the tribes disagree with the family's sets.
std::string iota_prefix(const BratteliDiagram& diagram, const SplitFamily& family, std::size_t v);

struct SplitSummary {
  bool good = false;
  bool all_nonempty = false;
  bool tribes_hit_all = false;  // every A_s with |s| = K yields s under iota_prefix
  std::uint64_t smallest_leaf = 0;
};

struct SplitTrials {
  std::vector<SplitSummary> trials;
  std::uint64_t good = 0;
  std::uint64_t good_and_surjective = 0;
};

/// Trial t runs evolve_and_split with trial_seed(seed, t).
SplitTrials evolve_and_split_trials(const BratteliDiagram& diagram, std::span<const std::size_t> schedule, double kappa,
                                    std::uint64_t trials, std::uint64_t seed, Execution exec = Execution::parallel);

/// eps_j = c j^{-(1 + delta/3)} with c chosen so that sum_{j >= N} eps_j = tail.
/// Returns eps_N..eps_last.
std::vector<Rational> default_eps_sequence(double delta, std::size_t N, std::size_t last, double tail = 0.45);

struct CascadeLevel {
  std::size_t level = 0;
  std::uint64_t set_size = 0;
  Rational delta;  // sum of eps up to this level
  Rational deviation;
  bool pass = false;
  double failure_bound = 0.0;  // bound for the transition into this level; 0 at level N
};

struct CascadeTrace {
  std::vector<CascadeLevel> levels;
  std::optional<std::size_t> first_failure;
  bool success = false;
};

/// Propagates A_N along ω-maximal edges and checks delta_{N+k}-equitability at
/// every level N..depth-1 with beta = 1/2. eps[i] is eps_{N+i}.
CascadeTrace equitability_cascade(const BratteliDiagram& diagram, std::uint64_t seed, std::size_t N,
                                  std::span<const Rational> eps, std::size_t depth, const VertexSet& A_N);

/// prod over levels N+1..depth-1 of (1 - 2 r |V_{m+1}| exp(-2 alpha |V_m| eps_m^2)), floored at 0.
double cascade_success_bound(const BratteliDiagram& diagram, std::size_t N, std::span<const Rational> eps,
                             std::size_t depth);

struct CascadeTrials {
  std::vector<CascadeTrace> trials;
  std::uint64_t successes = 0;
  double success_bound = 0.0;
};

/// Validates the preconditions once, then runs trial t with trial_seed(seed, t).
CascadeTrials equitability_cascade_trials(const BratteliDiagram& diagram, std::size_t N, std::span<const Rational> eps,
                                          std::size_t depth, const VertexSet& A_N, std::uint64_t trials,
                                          std::uint64_t seed, Execution exec = Execution::parallel);

/// Throws PreconditionError naming the first missing property among impartial,
/// superquadratic and exponentially bounded, or a violated eps condition.
void check_cascade_preconditions(const BratteliDiagram& diagram, std::size_t N, std::span<const Rational> eps,
                                 const VertexSet& A_N);

}  // namespace bratteli
