#include "bratteli/ordering.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "bratteli/errors.hpp"
#include "bratteli/rng.hpp"

namespace bratteli {

namespace {

std::string vertex_name(std::size_t level, std::size_t v) {
  return "level " + std::to_string(level) + " vertex " + std::to_string(v);
}

}  // namespace

void validate_path(const BratteliDiagram& diagram, const PathPrefix& path) {
  if (path.length() + 1 > diagram.depth()) throw ArgumentError("path is longer than the diagram");
  std::size_t previous = 0;
  for (std::size_t i = 0; i < path.length(); ++i) {
    const auto& e = path.edges[i];
    if (e.level != i + 1) throw ArgumentError("edge " + std::to_string(i) + " has level " + std::to_string(e.level));
    if (e.source != previous) throw ArgumentError("path breaks at level " + std::to_string(e.level));
    if (e.target >= diagram.level_size(e.level)) throw ArgumentError("edge target out of range at level " + std::to_string(e.level));
    if (e.copy >= diagram.incidence(e.level - 1).at(e.target, e.source)) {
      throw ArgumentError("edge copy out of range at level " + std::to_string(e.level));
    }
    previous = e.target;
  }
}

EdgeRef make_edge(const BratteliDiagram& diagram, std::size_t level, std::size_t target, std::uint64_t canonical) {
  const auto slot = diagram.incidence(level - 1).locate(target, canonical);
  return EdgeRef{level, target, slot.source, slot.copy};
}

// ---------------------------------------------------------------------------

Order Order::identity(const BratteliDiagram& diagram, std::size_t depth) {
  if (depth + 1 > diagram.depth()) {
    throw ArgumentError("order depth " + std::to_string(depth) + " exceeds the diagram's " +
                        std::to_string(diagram.depth() - 1) + " levels");
  }
  Order order;
  order.diagram_ = &diagram;
  order.depth_ = depth;
  order.offsets_.resize(depth + 1);
  order.rank_.resize(depth + 1);
  order.by_rank_.resize(depth + 1);
  std::uint64_t total = 0;
  for (std::size_t level = 1; level <= depth; ++level) {
    const auto size = diagram.level_size(level);
    auto& offsets = order.offsets_[level];
    offsets.resize(size + 1);
    for (std::size_t v = 0; v < size; ++v) {
      const auto d = diagram.in_degree(level, v);
      if (d > UINT32_MAX) throw CapExceeded("ranking of " + vertex_name(level, v), d, UINT32_MAX);
      offsets[v + 1] = offsets[v] + d;
    }
    total += offsets[size];
    if (total > kMaxMaterializedEdges) throw CapExceeded("materialized order", total, kMaxMaterializedEdges);
    auto& rank = order.rank_[level];
    rank.resize(offsets[size]);
    for (std::size_t v = 0; v < size; ++v) {
      const auto first = rank.begin() + static_cast<std::ptrdiff_t>(offsets[v]);
      const auto last = rank.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]);
      std::iota(first, last, std::uint32_t{0});
    }
    order.by_rank_[level] = rank;
  }
  return order;
}

std::size_t Order::slot(std::size_t level, std::size_t v) const {
  if (level == 0 || level > depth_) throw ArgumentError("level " + std::to_string(level) + " is not ordered");
  if (v >= offsets_[level].size() - 1) throw ArgumentError(vertex_name(level, v) + " is out of range");
  return static_cast<std::size_t>(offsets_[level][v]);
}

std::uint64_t Order::degree(std::size_t level, std::size_t v) const {
  const auto start = slot(level, v);
  return offsets_[level][v + 1] - start;
}

std::uint64_t Order::rank_of(std::size_t level, std::size_t v, std::uint64_t canonical) const {
  if (canonical >= degree(level, v)) throw ArgumentError("edge index out of range at " + vertex_name(level, v));
  return rank_[level][slot(level, v) + canonical];
}

std::uint64_t Order::rank_of(const EdgeRef& edge) const {
  const auto canonical = diagram_->incidence(edge.level - 1).canonical_index(edge.target, edge.source, edge.copy);
  return rank_of(edge.level, edge.target, canonical);
}

std::uint64_t Order::edge_at_rank(std::size_t level, std::size_t v, std::uint64_t rank) const {
  if (rank >= degree(level, v)) throw ArgumentError("rank out of range at " + vertex_name(level, v));
  return by_rank_[level][slot(level, v) + rank];
}

std::uint64_t Order::max_canonical(std::size_t level, std::size_t v) const {
  return edge_at_rank(level, v, degree(level, v) - 1);
}

std::uint64_t Order::min_canonical(std::size_t level, std::size_t v) const { return edge_at_rank(level, v, 0); }

std::size_t Order::max_source(std::size_t level, std::size_t v) const {
  return diagram_->incidence(level - 1).locate(v, max_canonical(level, v)).source;
}

std::size_t Order::min_source(std::size_t level, std::size_t v) const {
  return diagram_->incidence(level - 1).locate(v, min_canonical(level, v)).source;
}

EdgeRef Order::extreme_edge(std::size_t level, std::size_t v, Extreme which) const {
  const auto canonical = which == Extreme::max ? max_canonical(level, v) : min_canonical(level, v);
  return make_edge(*diagram_, level, v, canonical);
}

bool Order::is_max(const EdgeRef& edge) const { return rank_of(edge) + 1 == degree(edge.level, edge.target); }

bool Order::is_min(const EdgeRef& edge) const { return rank_of(edge) == 0; }

std::span<const std::uint32_t> Order::ranking(std::size_t level, std::size_t v) const {
  const auto start = slot(level, v);
  return std::span(rank_[level]).subspan(start, static_cast<std::size_t>(degree(level, v)));
}

std::span<const std::uint32_t> Order::by_rank(std::size_t level, std::size_t v) const {
  const auto start = slot(level, v);
  return std::span(by_rank_[level]).subspan(start, static_cast<std::size_t>(degree(level, v)));
}

void Order::set_by_rank(std::size_t level, std::size_t v, std::span<const std::uint32_t> by_rank) {
  const auto start = slot(level, v);
  const auto d = static_cast<std::size_t>(degree(level, v));
  if (by_rank.size() != d) throw ArgumentError("ranking of " + vertex_name(level, v) + " has the wrong length");
  std::vector<bool> seen(d, false);
  for (const auto e : by_rank) {
    if (e >= d || seen[e]) throw ArgumentError("ranking of " + vertex_name(level, v) + " is not a permutation");
    seen[e] = true;
  }
  for (std::size_t r = 0; r < d; ++r) {
    by_rank_[level][start + r] = by_rank[r];
    rank_[level][start + by_rank[r]] = static_cast<std::uint32_t>(r);
  }
}

void Order::set_ranking(std::size_t level, std::size_t v, std::span<const std::uint32_t> ranking) {
  const auto d = static_cast<std::size_t>(degree(level, v));
  if (ranking.size() != d) throw ArgumentError("ranking of " + vertex_name(level, v) + " has the wrong length");
  std::vector<std::uint32_t> inverse(d, UINT32_MAX);
  for (std::size_t e = 0; e < d; ++e) {
    if (ranking[e] >= d || inverse[ranking[e]] != UINT32_MAX) {
      throw ArgumentError("ranking of " + vertex_name(level, v) + " is not a permutation");
    }
    inverse[ranking[e]] = static_cast<std::uint32_t>(e);
  }
  set_by_rank(level, v, inverse);
}

bool operator==(const Order& a, const Order& b) {
  return a.depth_ == b.depth_ && (a.diagram_ == b.diagram_ || *a.diagram_ == *b.diagram_) && a.by_rank_ == b.by_rank_;
}

// ---------------------------------------------------------------------------

Order sample_order(const BratteliDiagram& diagram, std::uint64_t seed, std::size_t depth) {
  auto order = Order::identity(diagram, depth);
  std::vector<std::uint32_t> perm;
  for (std::size_t level = 1; level <= depth; ++level) {
    for (std::size_t v = 0; v < diagram.level_size(level); ++v) {
      const auto identity = order.by_rank(level, v);
      if (identity.size() < 2) continue;
      perm.assign(identity.begin(), identity.end());
      rng::CounterStream stream(rng::vertex_key(seed, level, v));
      rng::shuffle_top_down(stream, std::span(perm));
      order.set_by_rank(level, v, perm);
    }
  }
  return order;
}

std::uint64_t SeededOrder::max_canonical(std::size_t level, std::size_t v) const {
  return rng::first_pick(rng::vertex_key(seed_, level, v), diagram_->in_degree(level, v));
}

std::size_t SeededOrder::max_source(std::size_t level, std::size_t v) const {
  const auto& f = diagram_->incidence(level - 1);
  if (f.is_uniform() && *f.uniform_value() == 1) {
    return static_cast<std::size_t>(rng::first_pick(rng::vertex_key(seed_, level, v), f.cols()));
  }
  return f.locate(v, max_canonical(level, v)).source;
}

std::vector<std::uint32_t> SeededOrder::by_rank(std::size_t level, std::size_t v) const {
  const auto d = diagram_->in_degree(level, v);
  if (d > UINT32_MAX) throw CapExceeded("ranking of " + vertex_name(level, v), d, UINT32_MAX);
  std::vector<std::uint32_t> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), std::uint32_t{0});
  rng::CounterStream stream(rng::vertex_key(seed_, level, v));
  rng::shuffle_top_down(stream, std::span(perm));
  return perm;
}

std::size_t SeededOrder::min_source(std::size_t level, std::size_t v) const {
  return diagram_->incidence(level - 1).locate(v, by_rank(level, v).front()).source;
}

// ---------------------------------------------------------------------------

BigInt order_space_size(const BratteliDiagram& diagram, std::size_t depth) {
  if (depth + 1 > diagram.depth()) throw ArgumentError("depth exceeds the diagram");
  BigInt total = 1;
  for (std::size_t level = 1; level <= depth; ++level) {
    for (std::size_t v = 0; v < diagram.level_size(level); ++v) {
      const auto d = diagram.in_degree(level, v);
      if (d > 1000) throw CapExceeded("order space factorial", BigInt(d), BigInt(1000));
      total *= factorial(static_cast<unsigned>(d));
    }
  }
  return total;
}

OrderEnumerator::OrderEnumerator(const BratteliDiagram& diagram, std::size_t depth, std::uint64_t cap)
    : order_([&] {
        const auto size = order_space_size(diagram, depth);
        if (size > cap) throw CapExceeded("order enumeration", size, BigInt(cap));
        return Order::identity(diagram, depth);
      }()) {
  total_ = static_cast<std::uint64_t>(order_space_size(diagram, depth));
  for (std::size_t level = 1; level <= depth; ++level) {
    for (std::size_t v = 0; v < diagram.level_size(level); ++v) {
      if (order_.degree(level, v) < 2) continue;
      vertices_.emplace_back(level, v);
      const auto identity = order_.by_rank(level, v);
      perms_.emplace_back(identity.begin(), identity.end());
    }
  }
}

bool OrderEnumerator::next() {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const bool advanced = std::next_permutation(perms_[i].begin(), perms_[i].end());
    order_.set_by_rank(vertices_[i].first, vertices_[i].second, perms_[i]);
    if (advanced) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

std::strong_ordering compare_lex(const Order& order, const PathPrefix& p, const PathPrefix& q) {
  if (p.length() != q.length()) throw IncomparablePaths("paths have different lengths");
  if (p.end_vertex() != q.end_vertex()) throw IncomparablePaths("paths end at different vertices");
  for (std::size_t i = p.length(); i-- > 0;) {
    const auto& e = p.edges[i];
    const auto& f = q.edges[i];
    if (e == f) continue;
    return order.rank_of(e) <=> order.rank_of(f);
  }
  return std::strong_ordering::equal;
}

PathPrefix extreme_path(const Order& order, std::size_t level, std::size_t v, Extreme which) {
  if (level > order.depth()) throw ArgumentError("level exceeds the order depth");
  PathPrefix path;
  path.edges.resize(level);
  std::size_t current = v;
  for (std::size_t m = level; m >= 1; --m) {
    path.edges[m - 1] = order.extreme_edge(m, current, which);
    current = path.edges[m - 1].source;
  }
  return path;
}

AncestryTable ancestry_table(const Order& order, std::size_t k, std::size_t N) {
  if (!(k < N && N <= order.depth())) throw ArgumentError("ancestry table needs 0 <= k < N <= depth");
  return AncestryTable{k, N, tribe_map(order, k, N), clan_map(order, k, N)};
}

}  // namespace bratteli
