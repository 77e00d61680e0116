#include <gtest/gtest.h>

#include <set>

#include "bratteli/census.hpp"
#include "bratteli/diagram_io.hpp"
#include "bratteli/errors.hpp"
#include "bratteli/oracle.hpp"
#include "bratteli/rng.hpp"

using namespace bratteli;

namespace {

BratteliDiagram all_ones(std::vector<std::uint64_t> sizes) { return make_diagram(sizes, Generator::all_ones()); }

BratteliDiagram ruled(const char* rule, std::size_t depth, const char* generator = "all_ones") {
  return make_diagram(SizeRule::parse(rule), depth, Generator::parse(generator));
}

VertexSet prefix_set(std::size_t size, std::size_t members) {
  VertexSet A(size, 0);
  for (std::size_t v = 0; v < members; ++v) A[v] = 1;
  return A;
}

}  // namespace

TEST(SurvivingTribes, ChainHasOne) {
  const auto d = ruled("const:1", 10, "constant_rows(2)");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_EQ(surviving_tribes(sample_order(d, seed, 10), 2, 10), std::vector<std::uint32_t>{0});
  }
}

TEST(SurvivingTribes, OneStepExact) {
  const auto d = all_ones({1, 2, 2});
  OrderEnumerator it(d, 2);
  std::uint64_t ones = 0, twos = 0;
  do {
    const auto c = surviving_tribes(it.current(), 1, 2).size();
    (c == 1 ? ones : twos) += 1;
  } while (it.next());
  EXPECT_EQ(ones, 2u);
  EXPECT_EQ(twos, 2u);
}

TEST(SurvivingTribes, LazyMatchesMaterialized) {
  const auto d = ruled("poly:n+2", 8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(surviving_tribes(SeededOrder(d, seed), 1, 8), surviving_tribes(sample_order(d, seed, 8), 1, 8));
  }
}

TEST(EstimateJ, DivergentConcentratesOnOne) {
  const auto d = ruled("const:2", 40);
  const std::size_t depths[] = {10, 20, 40};
  const auto est = estimate_j(d, 1, depths, 2000, 4);
  EXPECT_TRUE(est.monotone);
  EXPECT_GE(static_cast<double>(est.histogram[2][1]) / 2000.0, 0.99);
}

TEST(EstimateJ, ConvergentKeepsSeveral) {
  const auto d = ruled("poly:(n+2)^2", 40);
  const std::size_t depths[] = {40};
  const auto est = estimate_j(d, 1, depths, 500, 4);
  std::uint64_t several = 0;
  for (std::size_t c = 2; c < est.histogram[0].size(); ++c) several += est.histogram[0][c];
  EXPECT_GE(static_cast<double>(several) / 500.0, 0.5);
}

TEST(EstimateJ, CountsNeverIncrease) {
  const auto d = ruled("poly:n+3", 40, "cyclic(2)");
  const std::size_t depths[] = {10, 20, 40};
  const auto est = estimate_j(d, 1, depths, 300, 9);
  EXPECT_TRUE(est.monotone);
  for (const auto& row : est.counts) {
    EXPECT_GE(row[0], row[1]);
    EXPECT_GE(row[1], row[2]);
  }
}

TEST(EstimateJ, SerialEqualsParallel) {
  const auto d = ruled("poly:n+2", 15);
  const std::size_t depths[] = {5, 15};
  const auto a = estimate_j(d, 2, depths, 200, 31, Execution::serial);
  const auto b = estimate_j(d, 2, depths, 200, 31, Execution::parallel);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.histogram, b.histogram);
}

TEST(EstimateJ, RejectsBadSchedule) {
  const auto d = ruled("const:2", 10);
  const std::size_t backwards[] = {8, 4};
  const std::size_t too_deep[] = {12};
  EXPECT_THROW(estimate_j(d, 1, backwards, 5, 1), ArgumentError);
  EXPECT_THROW(estimate_j(d, 1, too_deep, 5, 1), ArgumentError);
}

TEST(CheckEquitable, Extremes) {
  const auto d = make_diagram(std::vector<std::uint64_t>{1, 6, 4}, Generator::parse("cyclic(3)"));
  EXPECT_EQ(check_equitable(d, 1, VertexSet(6, 1), 1, Rational(1, 100)).worst_deviation, 0);
  const auto empty = check_equitable(d, 1, VertexSet(6, 0), Rational(1, 2), Rational(1, 100));
  EXPECT_EQ(empty.worst_deviation, Rational(1, 2));
  EXPECT_FALSE(empty.pass);
}

TEST(CheckEquitable, SingleClassHalf) {
  for (const std::uint64_t m : {5u, 8u, 13u}) {
    const auto d = all_ones({1, m, 3});
    const auto A = prefix_set(m, (m + 1) / 2);
    const auto report = check_equitable(d, 1, A, Rational(1, 2), Rational(1, 2 * m));
    EXPECT_EQ(report.worst_deviation, abs_value(Rational((m + 1) / 2, m) - Rational(1, 2)));
    EXPECT_TRUE(report.pass);
  }
}

TEST(InclusionProbability, WithinEquitabilityBand) {
  for (std::uint64_t i = 0; i < 40; ++i) {
    rng::CounterStream stream(rng::derive(0xabc ^ rng::kInstanceTag, i));
    const auto r = 1 + stream.bounded(3);
    const auto m = 3 + stream.bounded(10);
    const auto d = make_diagram(std::vector<std::uint64_t>{1, m, 4}, Generator::parse("cyclic(" + std::to_string(r) + ")"));
    const auto A = random_half_subset(m, 0xabc, i);
    const auto report = check_equitable(d, 1, A, Rational(1, 2), 1);
    for (std::size_t v = 0; v < 4; ++v) {
      const auto p = inclusion_probability(d, 1, A, v);
      EXPECT_LE(abs_value(p - Rational(1, 2)), report.worst_deviation);
    }
  }
}

TEST(FindEquitableSet, LargeLevelSucceedsQuickly) {
  // M_n >= 4 / eps^2 with eps = 1/5.
  const auto d = all_ones({1, 100, 3});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto search = find_equitable_set(d, 1, Rational(1, 5), 3, seed);
    ASSERT_TRUE(search.set);
    EXPECT_LE(search.attempts_used, 3u);
  }
}

TEST(FindEquitableSet, RefusesPartialDiagram) {
  const auto d = make_diagram(std::vector<std::uint64_t>{1, 2, 2, 2}, Generator::parse("diagonal_heavy(3, 1)"));
  EXPECT_THROW(find_equitable_set(d, 1, Rational(1, 5), 3, 1), PreconditionError);
}

TEST(FailureRate, WithinHoeffdingBound) {
  const auto d = make_diagram(std::vector<std::uint64_t>{1, 1000, 10}, Generator::parse("cyclic(2)"));
  const auto rate = equitability_failure_rate(d, 1, Rational(1, 10), 2000, 3);
  EXPECT_LT(rate.bounds.weak, 1.0);
  EXPECT_LE(rate.rate, std::max(rate.bounds.weak, 10.0 / 2000.0));
  EXPECT_TRUE(rate.within_weak_bound);
}

TEST(HoeffdingBounds, Formula) {
  const Impartiality imp{2, Rational(1, 2)};
  const auto b = hoeffding_bounds(imp, 1000, 10, 0.1);
  EXPECT_NEAR(b.strong, 2 * 2 * 10 * std::exp(-2 * 0.5 * 1000 * 0.01), 1e-12);
  EXPECT_NEAR(b.weak, 2 * 2 * 10 * std::exp(-0.5 * 1000 * 0.01), 1e-12);
}

TEST(GreedySchedule, Calibrated) {
  const std::vector<std::size_t> square{0, 152, 200, 201};
  EXPECT_EQ(greedy_schedule(SizeRule::parse("poly:(n+2)^2").sizes(201), 3, 0.4), square);
  EXPECT_TRUE(greedy_schedule(SizeRule::parse("poly:(n+2)^2").sizes(200), 3, 0.4).empty());
  const std::vector<std::size_t> cube{0, 20, 41, 42};
  EXPECT_EQ(greedy_schedule(SizeRule::parse("poly:(n+2)^3").sizes(42), 3, 0.2), cube);
}

TEST(EvolveSplit, EmptyScheduleFamily) {
  const auto d = all_ones({1, 3});
  const std::size_t schedule[] = {0};
  const auto family = evolve_and_split(d, 1, schedule, 0.2);
  EXPECT_TRUE(family.good);
  EXPECT_EQ(family.K(), 0u);
  EXPECT_EQ(family.sets.at(""), std::vector<std::uint32_t>{0});
}

TEST(EvolveSplit, OneSplitFirstHalfIsZero) {
  const auto d = all_ones({1, 6, 6});
  const std::size_t schedule[] = {0, 1};
  const auto family = evolve_and_split(d, 4, schedule, 0.5);
  ASSERT_TRUE(family.good);
  EXPECT_EQ(family.sets.at("0"), (std::vector<std::uint32_t>{0, 1, 2}));
  EXPECT_EQ(iota_prefix(d, family, 0), "0");
  EXPECT_EQ(iota_prefix(d, family, 5), "1");
}

TEST(EvolveSplit, GoodFamiliesAreSurjective) {
  const auto sizes = SizeRule::parse("poly:(n+2)^3").sizes(42);
  const auto d = make_diagram(sizes, Generator::all_ones());
  const std::vector<std::size_t> schedule{0, 20, 41, 42};
  std::size_t good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto family = evolve_and_split(d, seed, schedule, 0.2);
    if (!family.good) continue;
    ++good;
    std::set<std::string> seen;
    for (std::size_t v = 0; v < d.level_size(42); ++v) {
      const auto s = iota_prefix(d, family, v);
      ASSERT_EQ(s.size(), 3u);
      const auto& leaf = family.sets.at(s);
      EXPECT_TRUE(std::binary_search(leaf.begin(), leaf.end(), static_cast<std::uint32_t>(v)));
      seen.insert(s);
    }
    EXPECT_EQ(seen.size(), 8u);
  }
  EXPECT_GE(good, 14u);
}

TEST(EvolveSplit, RejectsNonAllOnes) {
  const auto d = make_diagram(std::vector<std::uint64_t>{1, 6, 6}, Generator::parse("cyclic(2)"));
  const std::size_t schedule[] = {0, 1};
  EXPECT_THROW(evolve_and_split(d, 1, schedule, 0.5), PreconditionError);
}

TEST(Cascade, EpsSequence) {
  const auto eps = default_eps_sequence(2.0, 5, 11);
  ASSERT_EQ(eps.size(), 7u);
  Rational total = 0;
  for (std::size_t i = 0; i + 1 < eps.size(); ++i) EXPECT_GT(eps[i], eps[i + 1]);
  for (const auto& e : eps) total += e;
  EXPECT_LT(total, Rational(45, 100));
}

TEST(Cascade, FullSetStaysFull) {
  const auto d = ruled("poly:(n+2)^4", 12);
  const auto eps = default_eps_sequence(2.0, 5, 11);
  const auto trace = equitability_cascade(d, 3, 5, eps, 12, VertexSet(d.level_size(5), 1));
  ASSERT_FALSE(trace.levels.empty());
  EXPECT_EQ(trace.levels[0].set_size, d.level_size(5));
  EXPECT_EQ(trace.levels[0].deviation, Rational(1, 2));
  EXPECT_FALSE(trace.success);
  EXPECT_EQ(check_equitable(d, 5, VertexSet(d.level_size(5), 1), 1, 0).worst_deviation, 0);
}

TEST(Cascade, RefusesCubicGrowth) {
  const auto d = ruled("poly:(n+2)^3", 12);
  const auto eps = default_eps_sequence(1.0, 5, 11);
  EXPECT_THROW(check_cascade_preconditions(d, 5, eps, VertexSet(d.level_size(5), 1)), PreconditionError);
}

TEST(Cascade, SuccessAboveBound) {
  const auto d = ruled("poly:(n+2)^4", 12);
  const auto eps = default_eps_sequence(2.0, 5, 11);
  const auto start = find_equitable_set(d, 5, eps[0], 50, 8);
  ASSERT_TRUE(start.set);
  const auto result = equitability_cascade_trials(d, 5, eps, 12, *start.set, 100, 8);
  EXPECT_GT(result.success_bound, 0.0);
  EXPECT_GE(static_cast<double>(result.successes) / 100.0, result.success_bound);
}
