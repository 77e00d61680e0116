#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/ordering.hpp"
#include "bratteli/rational.hpp"

namespace bratteli {

/// Maps F, G: {0..n-1} -> labels, G non-constant.
struct LemmaInstance {
  std::vector<std::uint32_t> F;
  std::vector<std::uint32_t> G;

  std::size_t n() const noexcept { return F.size(); }
  /// Throws ArgumentError unless |F| = |G| >= 2 and G is non-constant.
  void validate() const;
};

inline constexpr std::size_t kMaxLemmaSize = 9;
inline constexpr std::size_t kMaxTrailEdges = 12;

/// |{σ : F(σ(i)) = G(σ(i+1)) for 1 <= i < n}| by enumerating all n! bijections.
/// Throws std::logic_error if the count exceeds n!/(n-1).
BigInt count_good_orderings(const LemmaInstance& instance);

/// Directed multigraph with one labeled edge G(i) -> F(i) per element i.
struct TrailGraph {
  std::size_t vertices = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // (tail, head)
};

TrailGraph trail_graph(const LemmaInstance& instance);

/// Labeled Eulerian trails (parallel edges distinguished) by backtracking.
BigInt count_eulerian_trails(const TrailGraph& graph);

/// Edges a->b, b->a and n-2 loops at a; n(n-2)! good orderings.
LemmaInstance extremal_instance(std::size_t n);

/// Every instance of size n over `labels` labels up to relabeling of the domain
/// (multisets of (G(i), F(i)) pairs), skipping constant G.
void for_each_instance(std::size_t n, std::uint32_t labels, const std::function<void(const LemmaInstance&)>& fn);

LemmaInstance random_instance(std::size_t n, std::uint32_t labels, std::uint64_t seed, std::uint64_t index);

inline constexpr std::uint64_t kPathEnumerationCap = 1'000'000;

/// Every root path into (level, v), in canonical order.
std::vector<PathPrefix> enumerate_paths(const BratteliDiagram& diagram, std::size_t level, std::size_t v);

/// Continuity at (n, N, N') by comparing successors of every pair of length-N'
/// non-maximal prefixes that agree to level N.
bool brute_force_continuity(const Order& order, std::size_t n, std::size_t N, std::size_t N_prime);

inline constexpr std::uint64_t kMapEnumerationCap = 1'000'000;

/// Tries every map f: V_N -> V_n against condition (*) at all of V_{N'}.
std::optional<std::vector<std::uint32_t>> brute_force_star_map(const Order& order, std::size_t n, std::size_t N,
                                                               std::size_t N_prime);

/// P(|surviving_tribes(ω, k, N)| = c) for every c, over all orders on levels 1..N.
std::map<std::size_t, Rational> exact_census(const BratteliDiagram& diagram, std::size_t k, std::size_t N);

struct ExactImperfection {
  Rational p_E;
  Rational p_D;  // P(D_{n,N'-1})
  std::optional<Rational> bound;  // |V_n|^{|V_N|} P(D) / (|V_{N'-1}|-1)^{|V_{N'}|}; absent when infinite
  bool inequality_holds = false;
};

/// Exact P(E_{n,N,N'}) and P(D_{n,N'-1}) over all orders on levels 1..N'.
/// Throws std::logic_error if P(E) exceeds the bound.
ExactImperfection exact_imperfection(const BratteliDiagram& diagram, std::size_t n, std::size_t N,
                                     std::size_t N_prime);

/// A tiny diagram in the exact-versus-Monte-Carlo suite.
struct FixtureCase {
  std::string name;
  std::vector<std::uint64_t> sizes;
  std::string generator;
  std::size_t k = 0;  // census base level
  std::size_t census_depth = 0;
  std::size_t n = 0;  // imperfection levels (n, N, N'); N' = 0 skips
  std::size_t N = 0;
  std::size_t N_prime = 0;
};

std::vector<FixtureCase> fixture_cases();

/// Every oracle value as `descriptor = num/den` lines, sorted by descriptor.
std::string generate_fixtures();
std::map<std::string, Rational> parse_fixtures(std::string_view text);

}  // namespace bratteli
