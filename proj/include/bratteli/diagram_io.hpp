#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/int_expr.hpp"

namespace bratteli {

/// Level-size rule. "const:c" and "poly:EXPR" give M_0 = 1 and M_n = rule(n)
/// for n >= 1; "list:1,a,b,..." lists every level including the root.
class SizeRule {
 public:
  static SizeRule parse(std::string_view text);

  /// M_0..M_depth.
  std::vector<std::uint64_t> sizes(std::size_t depth) const;
  const std::string& text() const noexcept { return text_; }

 private:
  enum class Kind { constant, poly, list };
  Kind kind_ = Kind::constant;
  std::string text_;
  std::uint64_t constant_ = 1;
  std::optional<IntExpr> expr_;
  std::vector<std::uint64_t> list_;
};

/// Named incidence rule: `all_ones`, `constant_rows(c)` (every entry c), or
/// `diagonal_heavy(a_n, b)` with f_{ii} = a_n and every other entry b, or
/// `cyclic(r)` with f_{vw} = 1 + (v + w) mod r.
class Generator {
 public:
  static Generator parse(std::string_view text);
  static Generator all_ones() { return parse("all_ones"); }

  IncidenceMatrix matrix(std::size_t n, std::size_t rows, std::size_t cols) const;
  /// Canonical spelling, stable under parse.
  std::string text() const;

 private:
  enum class Kind { all_ones, constant_rows, cyclic, diagonal_heavy };
  Kind kind_ = Kind::all_ones;
  std::uint64_t value_ = 1;
  std::optional<IntExpr> diagonal_;
};

BratteliDiagram make_diagram(std::span<const std::uint64_t> level_sizes, const Generator& generator);
BratteliDiagram make_diagram(const SizeRule& sizes, std::size_t depth, const Generator& generator);

/// Diagram file text (JSON): {"levels": [...], "generator": "..."} for generated
/// diagrams, {"levels": [...], "incidence": [[[...], ...], ...]} otherwise.
std::string emit_diagram(const BratteliDiagram& diagram);
BratteliDiagram parse_diagram(std::string_view text);

BratteliDiagram load_diagram(const std::filesystem::path& path);
void save_diagram(const BratteliDiagram& diagram, const std::filesystem::path& path);

}  // namespace bratteli
