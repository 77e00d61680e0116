#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bratteli/rational.hpp"

namespace bratteli {

/// Edge-count matrix between two consecutive levels: entry (v, w) counts the
/// edges from w in V_n to v in V_{n+1}. Matrices whose entries all coincide are
/// stored without materializing the entries, which keeps the all-ones diagrams
/// of the Wright-Fisher experiments cheap at any level size.
class IncidenceMatrix {
 public:
  struct Slot {
    std::uint32_t source = 0;
    std::uint64_t copy = 0;
  };

  IncidenceMatrix() = default;

  static IncidenceMatrix uniform(std::size_t rows, std::size_t cols, std::uint64_t value);
  static IncidenceMatrix dense(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> row_major);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_uniform() const noexcept { return uniform_.has_value(); }
  std::optional<std::uint64_t> uniform_value() const noexcept { return uniform_; }

  std::uint64_t at(std::size_t row, std::size_t col) const;
  std::uint64_t row_sum(std::size_t row) const;
  std::uint64_t max_entry() const;
  std::uint64_t min_entry() const;

  /// Maps an index into the canonical incoming-edge list of `row` (sources
  /// ascending, copies ascending) to the edge's source and copy.
  Slot locate(std::size_t row, std::uint64_t canonical) const;
  std::uint64_t canonical_index(std::size_t row, std::size_t source, std::uint64_t copy) const;

  friend bool operator==(const IncidenceMatrix& a, const IncidenceMatrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::optional<std::uint64_t> uniform_;
  std::vector<std::uint64_t> entries_;  // row-major, dense only
  std::vector<std::uint64_t> prefix_;   // per row: cols+1 running sums, dense only
};

/// A Bratteli diagram truncated to finitely many levels. Level 0 is the root.
/// Vertices are addressed as (level, index) with indices 0..M_n-1.
class BratteliDiagram {
 public:
  /// Validates the dimension chain and that every vertex below the root has an
  /// incoming edge. Throws DiagramError naming the offending level or vertex.
  static BratteliDiagram build(std::vector<std::uint64_t> level_sizes,
                               std::vector<IncidenceMatrix> incidence,
                               std::string generator = {});

  /// Number of stored levels, including the root.
  std::size_t depth() const noexcept { return sizes_.size(); }
  std::size_t level_size(std::size_t level) const;
  std::span<const std::uint64_t> level_sizes() const noexcept { return sizes_; }

  /// F_n, mapping level n to level n+1; valid for n + 1 < depth().
  const IncidenceMatrix& incidence(std::size_t n) const;

  /// |r^{-1}(v)| for v at `level` >= 1.
  std::uint64_t in_degree(std::size_t level, std::size_t v) const;

  /// Generator rule this diagram was produced from, empty for explicit matrices.
  const std::string& generator() const noexcept { return generator_; }

  /// Same diagram without the levels past `depth`.
  BratteliDiagram truncated(std::size_t depth) const;

  /// Equality of level sizes and incidence entries; the generator label is ignored.
  friend bool operator==(const BratteliDiagram& a, const BratteliDiagram& b);

 private:
  BratteliDiagram() = default;

  std::vector<std::uint64_t> sizes_;
  std::vector<IncidenceMatrix> incidence_;
  std::string generator_;
};

/// Telescopes to the levels in `cuts` (strictly increasing, starting at 0).
BratteliDiagram telescope(const BratteliDiagram& diagram, std::span<const std::size_t> cuts);

/// |E(v_0, v)|, the number of root-to-v paths.
BigInt path_count(const BratteliDiagram& diagram, std::size_t level, std::size_t v);

struct Witness {
  std::size_t level = 0;
  std::string reason;
};

struct Impartiality {
  std::uint64_t r = 0;  // largest incidence entry
  Rational alpha;       // min over n, v, i of |V_n^{v,i}| / |V_n|
};

struct Superquadratic {
  double delta = 0.0;
  std::size_t threshold = 0;  // M_n >= n^{2+delta} for threshold <= n < depth
};

struct DiagramClassification {
  bool completely_connected = false;
  std::optional<Witness> not_completely_connected;

  std::optional<std::uint64_t> finite_rank;
  bool simple_witnessed = false;

  std::optional<Impartiality> impartial;
  std::optional<Witness> not_impartial;

  std::optional<Superquadratic> superquadratic;
  std::optional<Witness> not_superquadratic;

  bool exponentially_bounded = false;
  double exponential_tail = 0.0;   // tail partial sum for the best delta tried
  double exponential_delta = 0.0;  // delta at which the tail was evaluated
};

struct ClassifyOptions {
  /// Tail-sum tolerance for the exponential-boundedness proxy.
  double exponential_tolerance = 1e-9;
};

/// Default delta candidates used by the command-line runner.
std::vector<double> default_delta_candidates();

/// Evaluates every structural predicate over the stored levels. Asymptotic
/// predicates are "witnessed up to depth": superquadratic needs the bound on at
/// least the second half of the levels; exponential boundedness needs the sum
/// of |V_{n+1}| exp(-|V_n| / n^{2+2d/3}) over n >= depth/2 to stay below the
/// tolerance for some superquadratic constant d <= the reported delta.
DiagramClassification classify(const BratteliDiagram& diagram, std::span<const double> delta_candidates,
                               const ClassifyOptions& options = {});

/// |V_n^{v,i}|: the number of w in V_n with f^{(n)}_{v,w} = i.
std::uint64_t class_size(const BratteliDiagram& diagram, std::size_t n, std::size_t v, std::uint64_t i);

}  // namespace bratteli
