#include "bratteli/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bratteli/errors.hpp"

namespace bratteli {

// ---------------------------------------------------------------------------
// IncidenceMatrix

IncidenceMatrix IncidenceMatrix::uniform(std::size_t rows, std::size_t cols, std::uint64_t value) {
  IncidenceMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.uniform_ = value;
  return m;
}

IncidenceMatrix IncidenceMatrix::dense(std::size_t rows, std::size_t cols,
                                       std::vector<std::uint64_t> row_major) {
  if (row_major.size() != rows * cols) {
    throw DiagramError("incidence matrix has " + std::to_string(row_major.size()) + " entries, expected " +
                       std::to_string(rows) + "x" + std::to_string(cols));
  }
  IncidenceMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.entries_ = std::move(row_major);
  m.prefix_.resize(rows * (cols + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint64_t running = 0;
    m.prefix_[r * (cols + 1)] = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (__builtin_add_overflow(running, m.entries_[r * cols + c], &running)) {
        throw DiagramError("row sum overflows 64 bits");
      }
      m.prefix_[r * (cols + 1) + c + 1] = running;
    }
  }
  return m;
}

std::uint64_t IncidenceMatrix::at(std::size_t row, std::size_t col) const {
  if (row >= rows_ || col >= cols_) throw ArgumentError("incidence index out of range");
  return uniform_ ? *uniform_ : entries_[row * cols_ + col];
}

std::uint64_t IncidenceMatrix::row_sum(std::size_t row) const {
  if (row >= rows_) throw ArgumentError("incidence row out of range");
  if (uniform_) return *uniform_ * cols_;
  return prefix_[row * (cols_ + 1) + cols_];
}

std::uint64_t IncidenceMatrix::max_entry() const {
  if (uniform_) return *uniform_;
  return entries_.empty() ? 0 : *std::max_element(entries_.begin(), entries_.end());
}

std::uint64_t IncidenceMatrix::min_entry() const {
  if (uniform_) return *uniform_;
  return entries_.empty() ? 0 : *std::min_element(entries_.begin(), entries_.end());
}

IncidenceMatrix::Slot IncidenceMatrix::locate(std::size_t row, std::uint64_t canonical) const {
  if (canonical >= row_sum(row)) throw ArgumentError("canonical edge index out of range");
  if (uniform_) {
    return {static_cast<std::uint32_t>(canonical / *uniform_), canonical % *uniform_};
  }
  const auto first = prefix_.begin() + static_cast<std::ptrdiff_t>(row * (cols_ + 1));
  const auto last = first + static_cast<std::ptrdiff_t>(cols_ + 1);
  // first running sum strictly greater than the index marks the source
  const auto it = std::upper_bound(first, last, canonical);
  const auto source = static_cast<std::size_t>(it - first) - 1;
  return {static_cast<std::uint32_t>(source), canonical - *(first + static_cast<std::ptrdiff_t>(source))};
}

std::uint64_t IncidenceMatrix::canonical_index(std::size_t row, std::size_t source, std::uint64_t copy) const {
  if (copy >= at(row, source)) throw ArgumentError("edge copy exceeds multiplicity");
  if (uniform_) return source * *uniform_ + copy;
  return prefix_[row * (cols_ + 1) + source] + copy;
}

bool operator==(const IncidenceMatrix& a, const IncidenceMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
  if (a.uniform_ && b.uniform_) return *a.uniform_ == *b.uniform_;
  for (std::size_t r = 0; r < a.rows_; ++r) {
    for (std::size_t c = 0; c < a.cols_; ++c) {
      if (a.at(r, c) != b.at(r, c)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// BratteliDiagram

BratteliDiagram BratteliDiagram::build(std::vector<std::uint64_t> level_sizes,
                                       std::vector<IncidenceMatrix> incidence, std::string generator) {
  if (level_sizes.empty()) throw DiagramError("diagram needs at least the root level");
  if (level_sizes[0] != 1) throw DiagramError("level 0 must hold exactly one vertex (the root)");
  for (std::size_t n = 1; n < level_sizes.size(); ++n) {
    if (level_sizes[n] == 0) throw DiagramError("level " + std::to_string(n) + " is empty");
  }
  if (incidence.size() + 1 != level_sizes.size()) {
    throw DiagramError("expected " + std::to_string(level_sizes.size() - 1) + " incidence matrices, got " +
                       std::to_string(incidence.size()));
  }
  for (std::size_t n = 0; n < incidence.size(); ++n) {
    const auto& m = incidence[n];
    if (m.rows() != level_sizes[n + 1] || m.cols() != level_sizes[n]) {
      throw DiagramError("incidence matrix " + std::to_string(n) + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(level_sizes[n + 1]) + "x" +
                         std::to_string(level_sizes[n]));
    }
    if (m.is_uniform()) {
      if (*m.uniform_value() == 0) {
        throw DiagramError("vertex with no incoming edge: level " + std::to_string(n + 1) + " vertex 0");
      }
      continue;
    }
    for (std::size_t v = 0; v < m.rows(); ++v) {
      if (m.row_sum(v) == 0) {
        throw DiagramError("vertex with no incoming edge: level " + std::to_string(n + 1) + " vertex " +
                           std::to_string(v));
      }
    }
  }
  BratteliDiagram d;
  d.sizes_ = std::move(level_sizes);
  d.incidence_ = std::move(incidence);
  d.generator_ = std::move(generator);
  return d;
}

std::size_t BratteliDiagram::level_size(std::size_t level) const {
  if (level >= sizes_.size()) throw ArgumentError("level " + std::to_string(level) + " beyond stored depth");
  return static_cast<std::size_t>(sizes_[level]);
}

const IncidenceMatrix& BratteliDiagram::incidence(std::size_t n) const {
  if (n >= incidence_.size()) throw ArgumentError("no incidence matrix below level " + std::to_string(n));
  return incidence_[n];
}

std::uint64_t BratteliDiagram::in_degree(std::size_t level, std::size_t v) const {
  if (level == 0) throw ArgumentError("the root has no incoming edges");
  return incidence(level - 1).row_sum(v);
}

BratteliDiagram BratteliDiagram::truncated(std::size_t depth) const {
  if (depth == 0 || depth > sizes_.size()) throw ArgumentError("truncation depth out of range");
  BratteliDiagram d;
  d.sizes_.assign(sizes_.begin(), sizes_.begin() + static_cast<std::ptrdiff_t>(depth));
  d.incidence_.assign(incidence_.begin(), incidence_.begin() + static_cast<std::ptrdiff_t>(depth - 1));
  d.generator_ = generator_;
  return d;
}

bool operator==(const BratteliDiagram& a, const BratteliDiagram& b) {
  return a.sizes_ == b.sizes_ && a.incidence_ == b.incidence_;
}

// ---------------------------------------------------------------------------
// telescoping and path counts

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw ArgumentError("telescoped incidence entry overflows 64 bits");
  return out;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw ArgumentError("telescoped incidence entry overflows 64 bits");
  return out;
}

// upper * lower, where lower maps level a to level b and upper maps b to c.
IncidenceMatrix multiply(const IncidenceMatrix& upper, const IncidenceMatrix& lower) {
  if (upper.cols() != lower.rows()) throw ArgumentError("matrix product dimension mismatch");
  if (upper.is_uniform() && lower.is_uniform()) {
    const auto inner = static_cast<std::uint64_t>(upper.cols());
    return IncidenceMatrix::uniform(upper.rows(), lower.cols(),
                                    checked_mul(checked_mul(*upper.uniform_value(), *lower.uniform_value()), inner));
  }
  std::vector<std::uint64_t> out(upper.rows() * lower.cols(), 0);
  for (std::size_t i = 0; i < upper.rows(); ++i) {
    for (std::size_t k = 0; k < upper.cols(); ++k) {
      const auto a = upper.at(i, k);
      if (a == 0) continue;
      for (std::size_t j = 0; j < lower.cols(); ++j) {
        auto& cell = out[i * lower.cols() + j];
        cell = checked_add(cell, checked_mul(a, lower.at(k, j)));
      }
    }
  }
  return IncidenceMatrix::dense(upper.rows(), lower.cols(), std::move(out));
}

}  // namespace

BratteliDiagram telescope(const BratteliDiagram& diagram, std::span<const std::size_t> cuts) {
  if (cuts.empty() || cuts[0] != 0) throw ArgumentError("telescoping cuts must start at level 0");
  for (std::size_t k = 1; k < cuts.size(); ++k) {
    if (cuts[k] <= cuts[k - 1]) throw ArgumentError("telescoping cuts must be strictly increasing");
  }
  if (cuts.back() >= diagram.depth()) {
    throw ArgumentError("telescoping cut " + std::to_string(cuts.back()) + " beyond stored depth " +
                        std::to_string(diagram.depth()));
  }
  std::vector<std::uint64_t> sizes;
  std::vector<IncidenceMatrix> incidence;
  sizes.reserve(cuts.size());
  for (const auto c : cuts) sizes.push_back(diagram.level_sizes()[c]);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    IncidenceMatrix product = diagram.incidence(cuts[k]);
    for (std::size_t n = cuts[k] + 1; n < cuts[k + 1]; ++n) product = multiply(diagram.incidence(n), product);
    incidence.push_back(std::move(product));
  }
  return BratteliDiagram::build(std::move(sizes), std::move(incidence));
}

BigInt path_count(const BratteliDiagram& diagram, std::size_t level, std::size_t v) {
  if (level >= diagram.depth() || v >= diagram.level_size(level)) {
    throw ArgumentError("vertex (" + std::to_string(level) + ", " + std::to_string(v) + ") out of range");
  }
  std::vector<BigInt> counts{BigInt(1)};
  for (std::size_t n = 0; n < level; ++n) {
    const auto& f = diagram.incidence(n);
    std::vector<BigInt> next(f.rows());
    if (f.is_uniform()) {
      BigInt total = 0;
      for (const auto& c : counts) total += c;
      total *= *f.uniform_value();
      std::fill(next.begin(), next.end(), total);
    } else {
      for (std::size_t r = 0; r < f.rows(); ++r) {
        BigInt sum = 0;
        for (std::size_t w = 0; w < f.cols(); ++w) {
          if (const auto e = f.at(r, w)) sum += counts[w] * e;
        }
        next[r] = std::move(sum);
      }
    }
    counts = std::move(next);
  }
  return counts[v];
}

// ---------------------------------------------------------------------------
// classification

std::vector<double> default_delta_candidates() { return {0.05, 0.1, 0.25, 0.5, 1.0, 2.0}; }

std::uint64_t class_size(const BratteliDiagram& diagram, std::size_t n, std::size_t v, std::uint64_t i) {
  const auto& f = diagram.incidence(n);
  if (f.is_uniform()) return *f.uniform_value() == i ? f.cols() : 0;
  std::uint64_t count = 0;
  for (std::size_t w = 0; w < f.cols(); ++w) count += f.at(v, w) == i ? 1 : 0;
  return count;
}

namespace {

bool all_reachable(const std::vector<char>& reach) {
  return std::all_of(reach.begin(), reach.end(), [](char c) { return c != 0; });
}

// reach[w * cols + v]: some path from v at level m reaches w at the current level
bool simple_from(const BratteliDiagram& d, std::size_t m) {
  const std::size_t base = d.level_size(m);
  std::vector<char> reach;
  for (std::size_t n = m; n + 1 < d.depth(); ++n) {
    const auto& f = d.incidence(n);
    std::vector<char> next(f.rows() * base, 0);
    for (std::size_t w = 0; w < f.rows(); ++w) {
      for (std::size_t u = 0; u < f.cols(); ++u) {
        if (f.at(w, u) == 0) continue;
        for (std::size_t v = 0; v < base; ++v) {
          if (n == m ? u == v : reach[u * base + v] != 0) next[w * base + v] = 1;
        }
      }
    }
    reach = std::move(next);
    if (all_reachable(reach)) return true;
  }
  return false;
}

}  // namespace

DiagramClassification classify(const BratteliDiagram& diagram, std::span<const double> delta_candidates,
                               const ClassifyOptions& options) {
  DiagramClassification out;
  const std::size_t depth = diagram.depth();
  const std::size_t last = depth - 1;

  out.completely_connected = true;
  for (std::size_t n = 0; n + 1 < depth; ++n) {
    if (diagram.incidence(n).min_entry() == 0) {
      out.completely_connected = false;
      out.not_completely_connected = Witness{n, "incidence matrix " + std::to_string(n) + " has a zero entry"};
      break;
    }
  }

  if (last >= 1) {
    const std::size_t half = (last + 1) / 2;
    std::uint64_t first_max = 0;
    std::uint64_t second_max = 0;
    for (std::size_t n = 1; n <= last; ++n) {
      auto& slot = n <= half ? first_max : second_max;
      slot = std::max(slot, diagram.level_sizes()[n]);
    }
    if (second_max <= first_max) out.finite_rank = first_max;
  } else {
    out.finite_rank = 1;
  }

  if (out.completely_connected) {
    out.simple_witnessed = true;
  } else {
    out.simple_witnessed = true;
    for (std::size_t m = 0; m + 1 < depth; ++m) {
      if (!simple_from(diagram, m)) {
        out.simple_witnessed = false;
        break;
      }
    }
  }

  // impartiality: every value 1..r occurs in every row, each on an alpha-fraction of the columns.
  // The single-vertex root level cannot carry r classes, so F_0 is exempt once F_1 exists.
  if (!out.completely_connected) {
    out.not_impartial = Witness{out.not_completely_connected->level, "not completely connected"};
  } else if (depth < 2) {
    out.not_impartial = Witness{0, "no incidence matrices"};
  } else {
    const std::size_t first = depth >= 3 ? 1 : 0;
    std::uint64_t r = 0;
    for (std::size_t n = first; n + 1 < depth; ++n) r = std::max(r, diagram.incidence(n).max_entry());
    Rational alpha = 1;
    for (std::size_t n = first; n + 1 < depth && !out.not_impartial; ++n) {
      const auto& f = diagram.incidence(n);
      const std::size_t rows = f.is_uniform() ? 1 : f.rows();
      for (std::size_t v = 0; v < rows && !out.not_impartial; ++v) {
        std::vector<std::uint64_t> counts(r + 1, 0);
        for (std::size_t w = 0; w < f.cols(); ++w) {
          const auto e = f.at(v, w);
          counts[e] += f.is_uniform() ? f.cols() : 1;
          if (f.is_uniform()) break;
        }
        for (std::uint64_t i = 1; i <= r; ++i) {
          if (counts[i] == 0) {
            out.not_impartial = Witness{n, "entry value " + std::to_string(i) + " missing from row " +
                                               std::to_string(v) + " of incidence matrix " + std::to_string(n)};
            break;
          }
          alpha = std::min(alpha, Rational(counts[i], f.cols()));
        }
      }
    }
    if (!out.not_impartial) out.impartial = Impartiality{r, alpha};
  }

  // superquadratic: M_n >= n^{2+delta} on a tail covering at least the second half
  std::vector<double> deltas(delta_candidates.begin(), delta_candidates.end());
  std::sort(deltas.begin(), deltas.end());
  const auto sizes = diagram.level_sizes();
  auto threshold_for = [&](double delta) -> std::optional<std::size_t> {
    if (last < 1) return std::nullopt;
    std::size_t threshold = 1;
    for (std::size_t n = last; n >= 1; --n) {
      if (static_cast<double>(sizes[n]) < std::pow(static_cast<double>(n), 2.0 + delta)) {
        threshold = n + 1;
        break;
      }
    }
    if (threshold > (last + 1) / 2) return std::nullopt;
    return threshold;
  };
  std::vector<double> passing;
  for (const double delta : deltas) {
    if (threshold_for(delta)) passing.push_back(delta);
  }
  if (!passing.empty()) {
    out.superquadratic = Superquadratic{passing.back(), *threshold_for(passing.back())};
  } else {
    std::size_t fail = 0;
    if (!deltas.empty()) {
      for (std::size_t n = last; n >= 1; --n) {
        if (static_cast<double>(sizes[n]) < std::pow(static_cast<double>(n), 2.0 + deltas.front())) {
          fail = n;
          break;
        }
      }
    }
    out.not_superquadratic =
        Witness{fail, deltas.empty() ? "no delta candidates" : "M_n < n^(2+delta) on the second half of the levels"};
  }

  // exponential boundedness proxy; a smaller passing delta is also a valid constant
  out.exponential_tail = std::numeric_limits<double>::infinity();
  for (const double delta : passing) {
    const std::size_t start = std::max<std::size_t>(1, depth / 2);
    if (start + 1 > last) break;
    double tail = 0.0;
    for (std::size_t n = start; n + 1 <= last; ++n) {
      const double exponent = static_cast<double>(sizes[n]) / std::pow(static_cast<double>(n), 2.0 + 2.0 * delta / 3.0);
      tail += std::exp(std::log(static_cast<double>(sizes[n + 1])) - exponent);
    }
    if (tail < out.exponential_tail) {
      out.exponential_tail = tail;
      out.exponential_delta = delta;
    }
  }
  out.exponentially_bounded = out.exponential_tail < options.exponential_tolerance;
  return out;
}

}  // namespace bratteli
