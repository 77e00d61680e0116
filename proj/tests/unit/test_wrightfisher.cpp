#include <gtest/gtest.h>

#include <cmath>

#include "bratteli/diagram_io.hpp"
#include "bratteli/errors.hpp"
#include "bratteli/ordering.hpp"
#include "bratteli/stats.hpp"
#include "bratteli/wrightfisher.hpp"

using namespace bratteli;

namespace {

std::vector<std::uint64_t> sizes(const char* rule, std::size_t depth) { return SizeRule::parse(rule).sizes(depth); }

std::vector<std::uint32_t> two_labels(std::size_t size, std::size_t ones) {
  std::vector<std::uint32_t> labels(size, 0);
  for (std::size_t v = 0; v < ones; ++v) labels[v] = 1;
  return labels;
}

}  // namespace

TEST(Propagate, SharedAlleleIsClosed) {
  const auto d = make_diagram(SizeRule::parse("const:4"), 8, Generator::all_ones());
  const AlleleState initial{2, std::vector<std::uint32_t>(4, 7)};
  const auto out = propagate(d, 5, initial, 8);
  EXPECT_EQ(out.level, 8u);
  for (const auto a : out.alleles) EXPECT_EQ(a, 7u);
}

TEST(Propagate, SingleVertexChain) {
  const auto d = make_diagram(SizeRule::parse("const:1"), 6, Generator::all_ones());
  const auto out = propagate(d, 1, AlleleState{1, {3}}, 6);
  EXPECT_EQ(out.alleles, std::vector<std::uint32_t>{3});
}

TEST(Propagate, NextLevelIsBinomial) {
  const auto d = make_diagram(SizeRule::parse("const:5"), 2, Generator::all_ones());
  const AlleleState initial{1, two_labels(5, 2)};
  constexpr std::uint64_t kTrials = 100000;
  std::vector<double> observed(6, 0.0);
  stats::MeanAccumulator mean;
  for (std::uint64_t t = 0; t < kTrials; ++t) {
    const auto out = propagate(d, t, initial, 2);
    const auto count = std::count(out.alleles.begin(), out.alleles.end(), 1U);
    observed[count] += 1.0;
    mean.add(static_cast<double>(count));
  }
  EXPECT_NEAR(mean.mean(), 2.0, 3.0 * mean.standard_error());
  std::vector<double> expected(6);
  for (std::uint64_t c = 0; c <= 5; ++c) expected[c] = kTrials * stats::binomial_pmf(5, 0.4, c);
  const auto [chi2, cells] = stats::pearson_pooled(observed, expected);
  EXPECT_GE(stats::chi_square_sf(chi2, static_cast<double>(cells - 1)), 0.001);
}

TEST(Propagate, MatchesTribes) {
  const auto d = make_diagram(std::vector<std::uint64_t>{1, 3, 4, 4, 5}, Generator::parse("diagonal_heavy(3, 1)"));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    AlleleState initial{1, {0, 1, 2}};
    const auto out = propagate(d, seed, initial, 4, Inheritance::weighted);
    EXPECT_EQ(out.alleles, tribe_map(sample_order(d, seed, 4), 1, 4));
  }
}

TEST(Propagate, UniformModeNeedsAllOnes) {
  const auto d = make_diagram(std::vector<std::uint64_t>{1, 2, 2}, Generator::parse("cyclic(2)"));
  EXPECT_THROW(propagate(d, 1, AlleleState{1, {0, 1}}, 2), PreconditionError);
}

TEST(RunTrial, AbsorbingStarts) {
  const auto m = sizes("const:4", 10);
  const auto extinct = run_trial(m, 1, two_labels(4, 0), 1, 3, 10);
  EXPECT_EQ(extinct.extinction_level, 1u);
  for (const auto& y : extinct.y) EXPECT_EQ(y.count, 0u);
  const auto dominated = run_trial(m, 1, two_labels(4, 4), 1, 3, 10);
  EXPECT_EQ(dominated.domination_level, 1u);
  EXPECT_TRUE(dominated.fixated);
}

TEST(RunTrial, AgreesWithSampledOrder) {
  const auto m = sizes("const:4", 6);
  const auto d = make_diagram(m, Generator::all_ones());
  const auto labels = two_labels(4, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto run = run_trial(m, 1, labels, 1, seed, 6);
    const auto tribes = tribe_map(sample_order(d, seed, 6), 1, 6);
    const auto expected = std::count_if(tribes.begin(), tribes.end(), [&](auto t) { return labels[t] == 1; });
    EXPECT_EQ(run.y.back().count, static_cast<std::uint64_t>(expected));
  }
}

TEST(RunTrial, TwoPerLevelFixates) {
  const auto m = sizes("const:2", 21);
  const auto runs = simulate_trials(m, 1, two_labels(2, 1), 1, 10000, 77, 21);
  std::uint64_t fixated = 0;
  for (const auto& r : runs) fixated += r.fixated;
  // E Q_20 = (1/4)(1/2)^20 and P(not fixated) <= E Q_20 / (1/4).
  EXPECT_GE(static_cast<double>(fixated) / 10000.0, 0.99);
}

TEST(ExpectedQ, Examples) {
  const std::vector<std::uint64_t> with_one{1, 3, 1, 4};
  EXPECT_EQ(expected_q(with_one, Rational(1, 4), 3), Rational(0));
  EXPECT_EQ(expected_q(sizes("const:2", 3), Rational(1, 4), 3), Rational(1, 32));
  EXPECT_EQ(expected_q(sizes("poly:n+1", 4), Rational(1, 4), 4), Rational(1, 20));
  EXPECT_EQ(expected_q(sizes("const:5", 6), Rational(6, 25), 6, 1), Rational(6, 25) * Rational(1024, 3125));
}

TEST(MartingaleStats, ConstantFive) {
  const auto m = sizes("const:5", 16);
  const auto s = martingale_stats(m, 1, two_labels(5, 2), 1, 4000, 12, 16);
  EXPECT_EQ(s.y0, Rational(2, 5));
  EXPECT_TRUE(s.martingale_ok);
  EXPECT_TRUE(s.q_decay_ok);
  EXPECT_TRUE(s.variance_ok);
  EXPECT_EQ(s.levels.size(), 16u);
}

TEST(MartingaleStats, DeterministicInputHasZeroVariance) {
  const auto m = sizes("const:3", 8);
  const auto s = martingale_stats(m, 1, two_labels(3, 0), 1, 200, 1, 8);
  for (const auto& level : s.levels) {
    EXPECT_EQ(level.se_y, 0.0);
    EXPECT_EQ(level.se_q, 0.0);
    EXPECT_EQ(level.mean_sq_increment, 0.0);
  }
}

TEST(BinomialTest, PassesForConstantFive) {
  const auto m = sizes("const:5", 16);
  const auto runs = simulate_trials(m, 1, two_labels(5, 2), 1, 4000, 21, 16);
  const auto test = binomial_transition_test(m, runs);
  EXPECT_TRUE(test.pass) << "p = " << test.p_value;
  EXPECT_GT(test.transitions, 0u);
}

TEST(Simulate, SerialEqualsParallel) {
  const auto m = sizes("poly:n+2", 12);
  const auto a = simulate_trials(m, 1, two_labels(3, 1), 1, 300, 5, 12, Execution::serial);
  const auto b = simulate_trials(m, 1, two_labels(3, 1), 1, 300, 5, 12, Execution::parallel);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    ASSERT_EQ(a[t].y.size(), b[t].y.size());
    for (std::size_t i = 0; i < a[t].y.size(); ++i) EXPECT_EQ(a[t].y[i].count, b[t].y[i].count);
  }
}

TEST(Donnelly, SizeOneLevelForcesDomination) {
  std::vector<std::uint64_t> m{1, 4, 4, 1, 4, 4};
  const auto curve = donnelly_scan(m, 1, 100, 3, 5);
  for (const auto& p : curve) {
    if (p.level >= 3) EXPECT_EQ(p.fraction, 1.0);
  }
}

TEST(Donnelly, ConstantThreeDominates) {
  const auto curve = donnelly_scan(sizes("const:3", 60), 1, 2000, 8, 60);
  EXPECT_GE(curve.back().fraction, 0.99);
}

TEST(Donnelly, QuadraticStaysAway) {
  const auto curve = donnelly_scan(sizes("poly:(n+2)^2", 60), 1, 500, 8, 60);
  EXPECT_LE(curve.back().fraction, 0.9);
  EXPECT_LT(curve.back().reciprocal_sum, 0.5);
}
