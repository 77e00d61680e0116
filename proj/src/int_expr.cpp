#include "bratteli/int_expr.hpp"

#include <cctype>
#include <vector>

#include "bratteli/errors.hpp"

namespace bratteli {

struct IntExpr::Node {
  char op = 0;  // '#' literal, 'n' variable, otherwise a binary operator
  std::int64_t value = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const IntExpr::Node>;

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto node = sum();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ArgumentError("expression '" + std::string(text_) + "': " + msg);
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(char op, NodePtr a, NodePtr b) {
    auto node = std::make_shared<IntExpr::Node>();
    node->op = op;
    node->lhs = std::move(a);
    node->rhs = std::move(b);
    return node;
  }

  NodePtr sum() {
    auto node = product();
    for (;;) {
      if (accept('+')) {
        node = binary('+', node, product());
      } else if (accept('-')) {
        node = binary('-', node, product());
      } else {
        return node;
      }
    }
  }

  NodePtr product() {
    auto node = power();
    while (accept('*')) node = binary('*', node, power());
    return node;
  }

  NodePtr power() {
    auto base = atom();
    if (accept('^')) return binary('^', base, power());
    return base;
  }

  NodePtr atom() {
    skip();
    if (accept('(')) {
      auto inner = sum();
      if (!accept(')')) fail("missing ')'");
      return inner;
    }
    if (pos_ < text_.size() && text_[pos_] == 'n') {
      ++pos_;
      auto node = std::make_shared<IntExpr::Node>();
      node->op = 'n';
      return node;
    }
    if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      std::int64_t value = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        if (__builtin_mul_overflow(value, 10, &value) || __builtin_add_overflow(value, text_[pos_] - '0', &value)) {
          fail("literal too large");
        }
        ++pos_;
      }
      auto node = std::make_shared<IntExpr::Node>();
      node->op = '#';
      node->value = value;
      return node;
    }
    fail(pos_ < text_.size() ? "unexpected '" + std::string(1, text_[pos_]) + "'" : "unexpected end");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::int64_t eval(const IntExpr::Node& node, std::int64_t n) {
  auto overflow = [] { throw ArgumentError("expression value overflows 64 bits"); };
  std::int64_t out = 0;
  switch (node.op) {
    case '#':
      return node.value;
    case 'n':
      return n;
    case '+':
      if (__builtin_add_overflow(eval(*node.lhs, n), eval(*node.rhs, n), &out)) overflow();
      return out;
    case '-':
      if (__builtin_sub_overflow(eval(*node.lhs, n), eval(*node.rhs, n), &out)) overflow();
      return out;
    case '*':
      if (__builtin_mul_overflow(eval(*node.lhs, n), eval(*node.rhs, n), &out)) overflow();
      return out;
    case '^': {
      const auto base = eval(*node.lhs, n);
      const auto exponent = eval(*node.rhs, n);
      if (exponent < 0) throw ArgumentError("negative exponent");
      out = 1;
      for (std::int64_t i = 0; i < exponent; ++i) {
        if (__builtin_mul_overflow(out, base, &out)) overflow();
      }
      return out;
    }
    default:
      throw ArgumentError("corrupt expression");
  }
}

}  // namespace

IntExpr IntExpr::parse(std::string_view text) {
  IntExpr e;
  e.text_ = std::string(text);
  e.root_ = Parser(text).parse();
  return e;
}

std::int64_t IntExpr::evaluate(std::int64_t n) const { return eval(*root_, n); }

}  // namespace bratteli
