#pragma once

#include <string>
#include <string_view>

#include "bratteli/ordering.hpp"

namespace bratteli {

/// One line per vertex, `level vertex: r0 r1 ...`, where r_i is the rank of the
/// i-th canonical incoming edge.
std::string dump_order(const Order& order);

/// Inverse of dump_order. Every vertex on levels 1..depth must appear once,
/// where depth is the largest level listed.
Order parse_order(const BratteliDiagram& diagram, std::string_view text);

}  // namespace bratteli
