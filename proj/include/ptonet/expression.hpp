#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ptonet::expr {

// Grammar (whitespace ignored):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' INTEGER)?
//   primary := NUMBER | VARIABLE | FUNC '(' expr ')' | '(' expr ')'
// VARIABLE is x<block>_<entry>, both 1-based. FUNC is one of sin, cos, tanh,
// exp, abs. Exponents are positive integer literals, so -x1_1^2 = -(x1_1^2).

enum class Func { kSin, kCos, kTanh, kExp, kAbs };

struct Node {
  enum class Kind { kNumber, kVariable, kNeg, kAdd, kSub, kMul, kDiv, kPow, kCall };
  Kind kind = Kind::kNumber;
  double value = 0.0;      // kNumber
  std::size_t slot = 0;    // kVariable: flat state index
  unsigned exponent = 0;   // kPow
  Func func = Func::kSin;  // kCall
  int lhs = -1;
  int rhs = -1;
};

// Immutable expression tree stored as a node array; the root is the last node.
class Expression {
 public:
  Expression() = default;
  Expression(std::string source, std::vector<Node> nodes, std::size_t max_block);

  const std::string& source() const { return source_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  // Highest 1-based block index referenced, 0 for constant expressions.
  std::size_t max_block() const { return max_block_; }

  // Throws NumericalError on a zero denominator or any non-finite
  // intermediate value.
  double evaluate(std::span<const double> x) const;

  // Value and directional derivative d/ds f(x + s*dir) at s = 0 by
  // forward-mode evaluation of the same tree.
  struct Dual {
    double value;
    double slope;
  };
  Dual evaluate_directional(std::span<const double> x, std::span<const double> dir) const;

 private:
  double eval(int idx, std::span<const double> x) const;
  Dual eval_dual(int idx, std::span<const double> x, std::span<const double> dir) const;

  std::string source_;
  std::vector<Node> nodes_;
  std::size_t max_block_ = 0;
};

// `line` is reported in ParseError positions. `block_sizes` resolves
// x<i>_<k> into flat indices; unknown blocks or entries are rejected, as is
// any reference to a block above `max_allowed_block` (triangularity).
Expression parse_expression(std::string_view text, std::size_t line,
                            std::span<const std::size_t> block_sizes,
                            std::size_t max_allowed_block = std::numeric_limits<std::size_t>::max());

}  // namespace ptonet::expr
