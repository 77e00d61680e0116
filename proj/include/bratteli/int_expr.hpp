#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace bratteli {

/// Integer arithmetic in one variable `n`: integers, n, + - * ^ and parentheses.
/// Used by size rules such as "(n+2)^2" and generator arguments such as "50*n^2+1".
class IntExpr {
 public:
  static IntExpr parse(std::string_view text);

  /// Throws ArgumentError on overflow or a negative intermediate power base result.
  std::int64_t evaluate(std::int64_t n) const;

  const std::string& text() const noexcept { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace bratteli
