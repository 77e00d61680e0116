#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/parallel.hpp"
#include "bratteli/rational.hpp"

namespace bratteli {

struct AlleleState {
  std::size_t level = 0;
  std::vector<std::uint32_t> alleles;  // one label per vertex of V_level
};

enum class Inheritance {
  uniform,   // all-ones incidence required; parent uniform on V_m
  weighted,  // parent is the source of the ω-maximal edge, weighted by multiplicity
};

/// Carries labels down the ω-maximal edges of the order seeded by `seed`.
/// Agrees with tribe_map on the same seed.
AlleleState propagate(const BratteliDiagram& diagram, std::uint64_t seed, const AlleleState& initial,
                      std::size_t to_level, Inheritance mode = Inheritance::uniform);

/// One allele-count observation |S| out of M_n.
struct Frequency {
  std::uint64_t count = 0;
  std::uint64_t size = 1;

  Rational value() const { return Rational(count) / Rational(size); }
  double as_double() const { return static_cast<double>(count) / static_cast<double>(size); }
  /// Q = Y(1 - Y), exactly.
  Rational q() const { return value() * (1 - value()); }
  double q_double() const;
};

struct Trajectory {
  std::size_t start = 0;
  std::vector<Frequency> y;                     // y[i] belongs to level start + i
  std::vector<std::uint32_t> surviving_labels;  // distinct labels alive at each level
  std::optional<std::size_t> domination_level;  // first level with Y = 1
  std::optional<std::size_t> extinction_level;  // first level with Y = 0
  bool fixated = false;                         // terminal Y is 0 or 1
};

/// Wright-Fisher run on levels k..depth of the all-ones diagram with level sizes
/// `sizes` (sizes[0] = 1). Y tracks the frequency of label `focus`. Draws use the
/// same per-vertex keys as sample_order, so the run equals the tribe ancestry of
/// the order seeded by `seed`.
Trajectory run_trial(std::span<const std::uint64_t> sizes, std::size_t k, std::span<const std::uint32_t> labels,
                     std::uint32_t focus, std::uint64_t seed, std::size_t depth);

/// Trial t is run_trial with seed trial_seed(master_seed, t).
std::vector<Trajectory> simulate_trials(std::span<const std::uint64_t> sizes, std::size_t k,
                                        std::span<const std::uint32_t> labels, std::uint32_t focus,
                                        std::uint64_t trials, std::uint64_t master_seed, std::size_t depth,
                                        Execution exec = Execution::parallel);

/// q0 * prod_{j=k+1}^{n} (1 - 1/M_j); with k = 0 this is E Q_n for E Q_0 = q0.
Rational expected_q(std::span<const std::uint64_t> sizes, const Rational& q0, std::size_t n, std::size_t k = 0);

struct LevelStats {
  std::size_t level = 0;
  double mean_y = 0.0;
  double se_y = 0.0;
  double mean_q = 0.0;
  double se_q = 0.0;
  Rational expected_q;
  // Conditional variance check, for level > start: mean of (Y_n - Y_{n-1})^2,
  // mean of Q_{n-1}/M_n, and the standard error of their paired difference.
  double mean_sq_increment = 0.0;
  double mean_predicted_variance = 0.0;
  double se_variance_diff = 0.0;
};

struct MartingaleStats {
  Rational y0;
  std::vector<LevelStats> levels;
  double pooled_variance_diff = 0.0;  // per-trial sum over levels of the paired difference
  double pooled_variance_se = 0.0;
  bool martingale_ok = false;  // |mean Y_n - Y_k| <= 3 s.e. at every level
  bool q_decay_ok = false;     // |mean Q_n - expected_q| <= 3 s.e. at every level
  bool variance_ok = false;    // pooled paired difference within 3 s.e. of 0
};

MartingaleStats martingale_stats(std::span<const std::uint64_t> sizes, std::size_t k,
                                 std::span<const std::uint32_t> labels, std::uint32_t focus,
                                 std::uint64_t trials, std::uint64_t seed, std::size_t depth,
                                 Execution exec = Execution::parallel);

/// Summarizes trajectories already simulated with the given sizes.
MartingaleStats martingale_stats(std::span<const std::uint64_t> sizes, const std::vector<Trajectory>& runs);

struct BinomialTest {
  double statistic = 0.0;
  std::size_t degrees_of_freedom = 0;
  std::size_t strata = 0;
  std::uint64_t transitions = 0;
  double p_value = 1.0;
  bool pass = false;  // p_value >= significance
};

/// Pearson chi-square of |S_{n+1}| against Binomial(M_{n+1}, Y_n), stratified by
/// (M_n, |S_n|, M_{n+1}) over non-absorbed states, cells merged to expected >= 5.
BinomialTest binomial_transition_test(std::span<const std::uint64_t> sizes, const std::vector<Trajectory>& runs,
                                      double significance = 0.001);

struct DominationPoint {
  std::size_t level = 0;
  std::uint64_t dominated = 0;  // trials with a single surviving label
  double fraction = 0.0;
  double reciprocal_sum = 0.0;  // sum_{j=1}^{level} 1/M_j
};

/// Distinct labels per vertex of V_k; fraction of trials dominated at each level.
std::vector<DominationPoint> donnelly_scan(std::span<const std::uint64_t> sizes, std::size_t k,
                                           std::uint64_t trials, std::uint64_t seed, std::size_t depth,
                                           Execution exec = Execution::parallel);

}  // namespace bratteli
