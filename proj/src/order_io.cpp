#include "bratteli/order_io.hpp"

#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include "bratteli/errors.hpp"

namespace bratteli {

std::string dump_order(const Order& order) {
  std::ostringstream out;
  for (std::size_t level = 1; level <= order.depth(); ++level) {
    for (std::size_t v = 0; v < order.diagram().level_size(level); ++v) {
      out << level << ' ' << v << ':';
      for (const auto r : order.ranking(level, v)) out << ' ' << r;
      out << '\n';
    }
  }
  return out.str();
}

Order parse_order(const BratteliDiagram& diagram, std::string_view text) {
  struct Line {
    std::size_t level;
    std::size_t vertex;
    std::vector<std::uint32_t> ranks;
  };
  std::vector<Line> lines;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t depth = 0;
  std::size_t line_number = 0;
  while (std::getline(in, raw)) {
    ++line_number;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto colon = raw.find(':');
    if (colon == std::string::npos) throw ArgumentError("order line " + std::to_string(line_number) + " has no ':'");
    std::istringstream head(raw.substr(0, colon));
    Line line{};
    if (!(head >> line.level >> line.vertex) || line.level == 0) {
      throw ArgumentError("order line " + std::to_string(line_number) + " needs 'level vertex:'");
    }
    std::istringstream body(raw.substr(colon + 1));
    std::uint64_t r = 0;
    while (body >> r) line.ranks.push_back(static_cast<std::uint32_t>(r));
    if (!body.eof()) throw ArgumentError("order line " + std::to_string(line_number) + " has a malformed rank");
    depth = std::max(depth, line.level);
    lines.push_back(std::move(line));
  }
  auto order = Order::identity(diagram, depth);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& line : lines) {
    if (line.vertex >= diagram.level_size(line.level)) throw ArgumentError("order names a vertex outside the diagram");
    if (!seen.emplace(line.level, line.vertex).second) throw ArgumentError("order lists a vertex twice");
    order.set_ranking(line.level, line.vertex, line.ranks);
  }
  std::size_t expected = 0;
  for (std::size_t level = 1; level <= depth; ++level) expected += diagram.level_size(level);
  if (seen.size() != expected) throw ArgumentError("order does not rank every vertex up to its depth");
  return order;
}

}  // namespace bratteli
