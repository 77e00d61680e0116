#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bratteli/diagram.hpp"

namespace bratteli {

/// An edge from V_{level-1} to V_level. `copy` is 0-based among the parallel
/// edges between `source` and `target`.
struct EdgeRef {
  std::size_t level = 0;
  std::size_t target = 0;
  std::size_t source = 0;
  std::uint64_t copy = 0;

  friend bool operator==(const EdgeRef&, const EdgeRef&) = default;
};

/// Edges e_1..e_n of a root path; edges[i] has level i+1.
struct PathPrefix {
  std::vector<EdgeRef> edges;

  std::size_t length() const noexcept { return edges.size(); }
  /// Index of the final range vertex; 0 (the root) for the empty path.
  std::size_t end_vertex() const noexcept { return edges.empty() ? 0 : edges.back().target; }

  friend bool operator==(const PathPrefix&, const PathPrefix&) = default;
};

/// Throws ArgumentError unless `path` is a root path of `diagram`.
void validate_path(const BratteliDiagram& diagram, const PathPrefix& path);

EdgeRef make_edge(const BratteliDiagram& diagram, std::size_t level, std::size_t target, std::uint64_t canonical);

enum class Extreme { max, min };

/// Largest number of incoming edges an Order will materialize.
inline constexpr std::uint64_t kMaxMaterializedEdges = std::uint64_t{1} << 24;

/// A materialized order on levels 1..depth(). Rankings are indexed by the
/// canonical incoming-edge list of each vertex (sources ascending, then copies).
/// Holds a pointer to its diagram; the diagram must outlive the order.
class Order {
 public:
  /// Every vertex ranks its incoming edges in canonical order.
  static Order identity(const BratteliDiagram& diagram, std::size_t depth);

  const BratteliDiagram& diagram() const noexcept { return *diagram_; }
  std::size_t depth() const noexcept { return depth_; }
  std::uint64_t degree(std::size_t level, std::size_t v) const;

  std::uint64_t rank_of(std::size_t level, std::size_t v, std::uint64_t canonical) const;
  std::uint64_t rank_of(const EdgeRef& edge) const;
  /// Canonical index of the edge with rank `rank` (0 = smallest) into v.
  std::uint64_t edge_at_rank(std::size_t level, std::size_t v, std::uint64_t rank) const;

  std::uint64_t max_canonical(std::size_t level, std::size_t v) const;
  std::uint64_t min_canonical(std::size_t level, std::size_t v) const;
  std::size_t max_source(std::size_t level, std::size_t v) const;
  std::size_t min_source(std::size_t level, std::size_t v) const;
  EdgeRef extreme_edge(std::size_t level, std::size_t v, Extreme which) const;
  bool is_max(const EdgeRef& edge) const;
  bool is_min(const EdgeRef& edge) const;

  /// rank[canonical] for every incoming edge of v.
  std::span<const std::uint32_t> ranking(std::size_t level, std::size_t v) const;
  /// Canonical indices listed from rank 0 upwards.
  std::span<const std::uint32_t> by_rank(std::size_t level, std::size_t v) const;

  /// Replaces the ranking of v. Throws ArgumentError unless it is a permutation.
  void set_ranking(std::size_t level, std::size_t v, std::span<const std::uint32_t> ranking);
  void set_by_rank(std::size_t level, std::size_t v, std::span<const std::uint32_t> by_rank);

  friend bool operator==(const Order& a, const Order& b);

 private:
  Order() = default;
  std::size_t slot(std::size_t level, std::size_t v) const;

  const BratteliDiagram* diagram_ = nullptr;
  std::size_t depth_ = 0;
  // offsets_[level][v] is the start of v's block in rank_[level] and by_rank_[level].
  std::vector<std::vector<std::uint64_t>> offsets_;
  std::vector<std::vector<std::uint32_t>> rank_;
  std::vector<std::vector<std::uint32_t>> by_rank_;
};

/// Uniform random order, seeded per (seed, level, vertex). Vertex permutations
/// are independent of traversal order.
Order sample_order(const BratteliDiagram& diagram, std::uint64_t seed, std::size_t depth);

/// The same order as sample_order, evaluated lazily one vertex at a time. Used
/// where materializing every level would be too large.
class SeededOrder {
 public:
  SeededOrder(const BratteliDiagram& diagram, std::uint64_t seed) : diagram_(&diagram), seed_(seed) {}

  const BratteliDiagram& diagram() const noexcept { return *diagram_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t max_canonical(std::size_t level, std::size_t v) const;
  std::size_t max_source(std::size_t level, std::size_t v) const;
  /// Full shuffle of v's incoming edges: canonical indices from rank 0 upwards.
  std::vector<std::uint32_t> by_rank(std::size_t level, std::size_t v) const;
  std::size_t min_source(std::size_t level, std::size_t v) const;

 private:
  const BratteliDiagram* diagram_;
  std::uint64_t seed_;
};

/// prod over vertices at levels 1..depth of d_v!.
BigInt order_space_size(const BratteliDiagram& diagram, std::size_t depth);

/// Default cap on exhaustive order enumeration.
inline constexpr std::uint64_t kOrderEnumerationCap = 10'000'000;

/// Visits every order on levels 1..depth exactly once, starting from the identity.
class OrderEnumerator {
 public:
  /// Throws CapExceeded when the order space is larger than `cap`.
  OrderEnumerator(const BratteliDiagram& diagram, std::size_t depth, std::uint64_t cap = kOrderEnumerationCap);

  const Order& current() const noexcept { return order_; }
  /// Advances to the next order; false once every order has been visited.
  bool next();
  std::uint64_t total() const noexcept { return total_; }

 private:
  Order order_;
  std::vector<std::pair<std::size_t, std::size_t>> vertices_;  // (level, v) with d_v > 1
  std::vector<std::vector<std::uint32_t>> perms_;
  std::uint64_t total_ = 0;
};

/// Lexicographic comparison: the highest differing edge decides by its rank.
/// Throws IncomparablePaths for paths of different length or end vertex.
std::strong_ordering compare_lex(const Order& order, const PathPrefix& p, const PathPrefix& q);

/// The path into (level, v) made of ω-maximal (or minimal) edges only.
PathPrefix extreme_path(const Order& order, std::size_t level, std::size_t v, Extreme which);

struct AncestryTable {
  std::size_t base = 0;
  std::size_t top = 0;
  std::vector<std::uint32_t> tribe;  // v in V_top -> level-base vertex on its maximal path
  std::vector<std::uint32_t> clan;   // same along the minimal path; empty when not computed
};

/// tribe_{k,N} by one bottom-up sweep over levels k+1..N. `O` supplies max_source.
template <class O>
std::vector<std::uint32_t> tribe_map(const O& order, std::size_t k, std::size_t N) {
  const auto& d = order.diagram();
  std::vector<std::uint32_t> current(d.level_size(k));
  for (std::size_t v = 0; v < current.size(); ++v) current[v] = static_cast<std::uint32_t>(v);
  std::vector<std::uint32_t> next;
  for (std::size_t m = k + 1; m <= N; ++m) {
    next.resize(d.level_size(m));
    for (std::size_t v = 0; v < next.size(); ++v) next[v] = current[order.max_source(m, v)];
    current.swap(next);
  }
  return current;
}

template <class O>
std::vector<std::uint32_t> clan_map(const O& order, std::size_t k, std::size_t N) {
  const auto& d = order.diagram();
  std::vector<std::uint32_t> current(d.level_size(k));
  for (std::size_t v = 0; v < current.size(); ++v) current[v] = static_cast<std::uint32_t>(v);
  std::vector<std::uint32_t> next;
  for (std::size_t m = k + 1; m <= N; ++m) {
    next.resize(d.level_size(m));
    for (std::size_t v = 0; v < next.size(); ++v) next[v] = current[order.min_source(m, v)];
    current.swap(next);
  }
  return current;
}

/// Requires 0 <= k < N <= order.depth().
AncestryTable ancestry_table(const Order& order, std::size_t k, std::size_t N);

}  // namespace bratteli
