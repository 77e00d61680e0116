#include <gtest/gtest.h>

#include "bratteli/diagram_io.hpp"
#include "bratteli/errors.hpp"
#include "bratteli/oracle.hpp"
#include "bratteli/ordering.hpp"
#include "bratteli/vershik.hpp"

using namespace bratteli;

namespace {

BratteliDiagram all_ones(std::vector<std::uint64_t> sizes) { return make_diagram(sizes, Generator::all_ones()); }

PathPrefix odometer_prefix(std::initializer_list<std::uint64_t> bits) {
  PathPrefix x;
  std::size_t level = 1;
  for (const auto b : bits) x.edges.push_back(EdgeRef{level++, 0, 0, b});
  return x;
}

}  // namespace

TEST(Successor, OdometerCarry) {
  const auto d = make_diagram(SizeRule::parse("const:1"), 4, Generator::parse("constant_rows(2)"));
  const auto o = Order::identity(d, 4);
  const auto r = successor(o, odometer_prefix({1, 1, 0, 0}));
  ASSERT_FALSE(r.extreme);
  EXPECT_EQ(r.pivot, 3u);
  EXPECT_EQ(r.path, odometer_prefix({0, 0, 1, 0}));
  const auto back = predecessor(o, odometer_prefix({0, 0, 1, 0}));
  ASSERT_FALSE(back.extreme);
  EXPECT_EQ(back.path, odometer_prefix({1, 1, 0, 0}));
}

TEST(Successor, MaximalAndMinimalMarkers) {
  const auto d = all_ones({1, 3, 3});
  const auto o = sample_order(d, 11, 2);
  EXPECT_TRUE(successor(o, extreme_path(o, 2, 1, Extreme::max)).extreme);
  EXPECT_TRUE(predecessor(o, extreme_path(o, 2, 1, Extreme::min)).extreme);
}

TEST(Successor, InvariantsAndInverse) {
  const auto d = make_diagram(std::vector<std::uint64_t>{1, 2, 3, 2}, Generator::parse("cyclic(2)"));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto o = sample_order(d, seed, 3);
    for (std::size_t v = 0; v < 2; ++v) {
      for (const auto& x : enumerate_paths(d, 3, v)) {
        const auto r = successor(o, x);
        if (r.extreme) continue;
        const auto k = r.pivot;
        for (std::size_t i = k; i < 3; ++i) EXPECT_EQ(r.path.edges[i], x.edges[i]);
        EXPECT_EQ(o.rank_of(r.path.edges[k - 1]), o.rank_of(x.edges[k - 1]) + 1);
        for (std::size_t i = 0; i + 1 < k; ++i) EXPECT_TRUE(o.is_min(r.path.edges[i]));
        EXPECT_EQ(predecessor(o, r.path).path, x);
        EXPECT_EQ(compare_lex(o, x, r.path), std::strong_ordering::less);
      }
    }
  }
}

TEST(Successor, OrbitCoversEveryPath) {
  const auto d = all_ones({1, 3, 3});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto o = sample_order(d, seed, 2);
    for (std::size_t v = 0; v < 3; ++v) {
      const auto check = successor_orbit(o, 2, v);
      EXPECT_TRUE(check.ok());
      EXPECT_EQ(check.paths, 3u);
      EXPECT_EQ(check.orbit_length, 3u);
    }
  }
}

TEST(Successor, RejectsInvalidPrefix) {
  const auto d = all_ones({1, 2, 2});
  const auto o = Order::identity(d, 2);
  PathPrefix broken{{EdgeRef{1, 0, 0, 0}, EdgeRef{2, 0, 1, 0}}};
  EXPECT_THROW(successor(o, broken), ArgumentError);
}

TEST(Continuity, SingleVertexLevels) {
  const auto d = make_diagram(SizeRule::parse("const:1"), 5, Generator::parse("constant_rows(3)"));
  const auto o = sample_order(d, 3, 5);
  EXPECT_TRUE(continuity_check(o, 1, 2, 4));
  EXPECT_TRUE(continuity_check(o, 2, 3, 5));
}

TEST(Continuity, SingleClanHolds) {
  const auto d = all_ones({1, 2, 2, 2});
  const auto o = Order::identity(d, 3);
  // Every minimal edge leaves vertex 0, so V_2 holds a single 1-clan.
  EXPECT_EQ(clan_count(o, 1, 2), 1u);
  EXPECT_TRUE(continuity_check(o, 1, 2, 3));
  EXPECT_TRUE(brute_force_continuity(o, 1, 2, 3));
}

TEST(Continuity, AgreesWithBruteForce) {
  const auto d = all_ones({1, 4, 4, 4, 4});
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto o = sample_order(d, seed, 4);
    EXPECT_EQ(continuity_check(o, 1, 2, 4), brute_force_continuity(o, 1, 2, 4)) << "seed " << seed;
  }
  const auto c = make_diagram(std::vector<std::uint64_t>{1, 2, 3, 3}, Generator::parse("cyclic(2)"));
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto o = sample_order(c, seed, 3);
    EXPECT_EQ(continuity_check(o, 1, 2, 3), brute_force_continuity(o, 1, 2, 3)) << "seed " << seed;
  }
}

TEST(StarMap, SingleVertexTarget) {
  const auto d = all_ones({1, 1, 3, 3});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto o = sample_order(d, seed, 3);
    const auto f = find_star_map(o, 1, 2, 3);
    ASSERT_TRUE(f);
    for (const auto x : *f) EXPECT_EQ(x, 0u);
  }
}

TEST(StarMap, ContradictionGivesNone) {
  const auto d = BratteliDiagram::build(
      {1, 2, 2, 1}, {IncidenceMatrix::uniform(2, 1, 1), IncidenceMatrix::uniform(2, 2, 1), IncidenceMatrix::uniform(1, 2, 2)});
  auto o = Order::identity(d, 3);
  const std::uint32_t flipped[] = {1, 0};
  o.set_by_rank(2, 1, flipped);  // 1-clans of V_2: vertex 0 -> 0, vertex 1 -> 1
  // Edges into V_3 ranked s0, s0, s1, s1: f(0) must equal both clan 0 and clan 1.
  ASSERT_EQ(clan_count(o, 1, 2), 2u);
  EXPECT_FALSE(find_star_map(o, 1, 2, 3).has_value());
  EXPECT_FALSE(brute_force_star_map(o, 1, 2, 3).has_value());
  const std::uint32_t alternating[] = {0, 2, 1, 3};
  o.set_by_rank(3, 0, alternating);  // s0, s1, s0, s1: f(0) = 1 and f(1) = 0
  const auto f = find_star_map(o, 1, 2, 3);
  ASSERT_TRUE(f);
  EXPECT_EQ(*f, (std::vector<std::uint32_t>{1, 0}));
}

TEST(StarMap, AgreesWithExhaustiveSearch) {
  const auto d = all_ones({1, 2, 3, 3, 3});
  std::size_t found = 0, missing = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto o = sample_order(d, seed, 4);
    const auto f = find_star_map(o, 1, 2, 4);
    const auto g = brute_force_star_map(o, 1, 2, 4);
    ASSERT_EQ(f.has_value(), g.has_value()) << "seed " << seed;
    if (f) {
      ++found;
      for (std::size_t v = 0; v < 3; ++v) EXPECT_TRUE(star_condition_at(o, *f, 1, 2, 4, v));
    } else {
      ++missing;
    }
  }
  EXPECT_GT(found, 0u);
  EXPECT_GT(missing, 0u);
}

TEST(Probe, EventsNest) {
  const auto d = all_ones({1, 3, 3, 3, 3});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = probe_imperfection(sample_order(d, seed, 4), 1, 2, 4);
    EXPECT_EQ(p.in_E, p.star_map.has_value());
    if (p.in_E) EXPECT_TRUE(p.in_D);
    EXPECT_EQ(p.in_D, p.clan_count_at >= 2);
  }
}

TEST(ImperfectionBound, Formula) {
  EXPECT_EQ(*imperfection_bound(all_ones({1, 5, 5, 5, 5}), 1, 2, 4), Rational(BigInt(3125), BigInt(1024)));
  // |V_1|^{|V_2|} / (|V_4| - 1)^{|V_5|} = 5^9 / 8^9.
  const auto bound = imperfection_bound(all_ones({1, 5, 9, 9, 9, 9}), 1, 2, 5);
  EXPECT_EQ(*bound, Rational(pow_big(5, 9), pow_big(8, 9)));
  EXPECT_FALSE(imperfection_bound(all_ones({1, 2, 2, 1, 2}), 1, 2, 4).has_value());
}

TEST(EstimateE, RespectsCappedBound) {
  const auto d = all_ones({1, 5, 5, 5, 5});
  const auto est = estimate_E_probability(d, 1, 2, 4, 2000, 3);
  EXPECT_EQ(est.analytic_bound, Rational(1));
  EXPECT_LE(est.empirical_p, 1.0);
  EXPECT_LE(est.ci.low, est.empirical_p);
  EXPECT_GE(est.ci.high, est.empirical_p);
}

TEST(EstimateE, InformativeBound) {
  const auto d = all_ones({1, 5, 9, 9, 9, 9});
  const auto est = estimate_E_probability(d, 1, 2, 5, 10000, 17);
  EXPECT_EQ(est.in_E, 0u);
  EXPECT_LT(to_double(est.analytic_bound), 0.02);
}

TEST(EstimateE, RefusesIncompleteConnectivity) {
  const auto d = BratteliDiagram::build({1, 2, 2, 2}, {IncidenceMatrix::uniform(2, 1, 1), IncidenceMatrix::dense(2, 2, {1, 0, 1, 1}),
                                                      IncidenceMatrix::uniform(2, 2, 1)});
  EXPECT_THROW(estimate_E_probability(d, 1, 2, 3, 10, 1), PreconditionError);
}

TEST(EstimateE, ExactWhenEnumerable) {
  const auto d = all_ones({1, 2, 2, 2, 2});
  EstimateOptions options;
  options.exact_when_enumerable = true;
  const auto est = estimate_E_probability(d, 1, 2, 4, 100, 5, options);
  ASSERT_TRUE(est.exact_p);
  EXPECT_EQ(*est.exact_p, exact_imperfection(d, 1, 2, 4).p_E);
}

TEST(EstimateE, SerialEqualsParallel) {
  const auto d = all_ones({1, 3, 4, 4, 4});
  EstimateOptions serial;
  serial.execution = Execution::serial;
  const auto a = estimate_E_probability(d, 1, 2, 4, 500, 99, serial);
  const auto b = estimate_E_probability(d, 1, 2, 4, 500, 99);
  EXPECT_EQ(a.trial_in_E, b.trial_in_E);
  EXPECT_EQ(a.trial_in_D, b.trial_in_D);
}
