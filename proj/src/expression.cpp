#include "ptonet/expression.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <limits>
#include <cmath>
#include <sstream>

#include "ptonet/error.hpp"

namespace ptonet::expr {

namespace {

double ipow(double base, unsigned exponent) {
  double result = 1.0;
  while (exponent > 0) {
    if (exponent & 1u) result *= base;
    base *= base;
    exponent >>= 1u;
  }
  return result;
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string("non-finite intermediate value in ") + what);
  }
  return v;
}

struct Token {
  enum class Kind { kNumber, kIdent, kOp, kEnd };
  Kind kind = Kind::kEnd;
  std::string text;
  double number = 0.0;
  bool integral = false;
  std::size_t column = 0;  // 1-based
};

class Parser {
 public:
  Parser(std::string_view text, std::size_t line, std::span<const std::size_t> block_sizes,
         std::size_t max_allowed_block)
      : text_(text), line_(line), blocks_(block_sizes), max_allowed_(max_allowed_block) {
    offsets_.reserve(blocks_.size());
    std::size_t off = 0;
    for (std::size_t b : blocks_) {
      offsets_.push_back(off);
      off += b;
    }
    advance();
  }

  Expression parse() {
    if (tok_.kind == Token::Kind::kEnd) fail("empty expression", tok_.column);
    const int root = parse_expr();
    if (tok_.kind != Token::Kind::kEnd) fail("unexpected '" + tok_.text + "'", tok_.column);
    // Children are always appended before their parent, so the root is last.
    if (root != static_cast<int>(nodes_.size()) - 1) fail("internal parser error", 1);
    return Expression(std::string(text_), std::move(nodes_), max_block_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t column) const {
    throw ParseError(msg, line_, column);
  }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok_ = Token{};
    tok_.column = pos_ + 1;
    if (pos_ >= text_.size()) {
      tok_.kind = Token::Kind::kEnd;
      tok_.text = "end of input";
      return;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = pos_;
      bool integral = true;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ < text_.size() && text_[pos_] == '.') {
        integral = false;
        ++pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        integral = false;
        ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
        const std::size_t digits = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (digits == pos_) fail("malformed number exponent", start + 1);
      }
      tok_.kind = Token::Kind::kNumber;
      tok_.text = std::string(text_.substr(start, pos_ - start));
      tok_.integral = integral;
      const auto res = std::from_chars(tok_.text.data(), tok_.text.data() + tok_.text.size(), tok_.number);
      if (res.ec != std::errc() || res.ptr != tok_.text.data() + tok_.text.size() ||
          !std::isfinite(tok_.number)) {
        fail("malformed number '" + tok_.text + "'", start + 1);
      }
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Kind::kIdent;
      tok_.text = std::string(text_.substr(start, pos_ - start));
      return;
    }
    if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^' || c == '(' || c == ')') {
      tok_.kind = Token::Kind::kOp;
      tok_.text = std::string(1, c);
      ++pos_;
      return;
    }
    fail(std::string("unexpected character '") + c + "'", pos_ + 1);
  }

  bool is_op(char c) const { return tok_.kind == Token::Kind::kOp && tok_.text[0] == c; }

  void expect(char c) {
    if (!is_op(c)) fail(std::string("expected '") + c + "' but found '" + tok_.text + "'", tok_.column);
    advance();
  }

  int push(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size() - 1);
  }

  int binary(Node::Kind kind, int lhs, int rhs) {
    Node n;
    n.kind = kind;
    n.lhs = lhs;
    n.rhs = rhs;
    return push(n);
  }

  int parse_expr() {
    int lhs = parse_term();
    while (is_op('+') || is_op('-')) {
      const auto kind = is_op('+') ? Node::Kind::kAdd : Node::Kind::kSub;
      advance();
      lhs = binary(kind, lhs, parse_term());
    }
    return lhs;
  }

  int parse_term() {
    int lhs = parse_unary();
    while (is_op('*') || is_op('/')) {
      const auto kind = is_op('*') ? Node::Kind::kMul : Node::Kind::kDiv;
      advance();
      lhs = binary(kind, lhs, parse_unary());
    }
    return lhs;
  }

  int parse_unary() {
    if (is_op('-')) {
      advance();
      Node n;
      n.kind = Node::Kind::kNeg;
      n.lhs = parse_unary();
      return push(n);
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (!is_op('^')) return base;
    advance();
    if (tok_.kind != Token::Kind::kNumber || !tok_.integral || tok_.number < 1.0 ||
        tok_.number > 64.0) {
      fail("exponent must be a positive integer literal (1..64)", tok_.column);
    }
    Node n;
    n.kind = Node::Kind::kPow;
    n.lhs = base;
    n.exponent = static_cast<unsigned>(tok_.number);
    advance();
    if (is_op('^')) fail("chained powers are not supported; use parentheses", tok_.column);
    return push(n);
  }

  int parse_primary() {
    if (tok_.kind == Token::Kind::kNumber) {
      Node n;
      n.kind = Node::Kind::kNumber;
      n.value = tok_.number;
      advance();
      return push(n);
    }
    if (is_op('(')) {
      advance();
      const int inner = parse_expr();
      expect(')');
      return inner;
    }
    if (tok_.kind == Token::Kind::kIdent) {
      const std::string name = tok_.text;
      const std::size_t column = tok_.column;
      advance();
      if (is_op('(')) {
        Func f;
        if (name == "sin") f = Func::kSin;
        else if (name == "cos") f = Func::kCos;
        else if (name == "tanh") f = Func::kTanh;
        else if (name == "exp") f = Func::kExp;
        else if (name == "abs") f = Func::kAbs;
        else fail("unknown function '" + name + "'", column);
        advance();
        Node n;
        n.kind = Node::Kind::kCall;
        n.func = f;
        n.lhs = parse_expr();
        expect(')');
        return push(n);
      }
      return push(variable(name, column));
    }
    fail("expected a number, variable, function call or '(' but found '" + tok_.text + "'",
         tok_.column);
  }

  Node variable(const std::string& name, std::size_t column) {
    // x<block>_<entry>
    std::size_t block = 0, entry = 0;
    const auto under = name.find('_');
    bool ok = name.size() > 3 && name[0] == 'x' && under != std::string::npos && under > 1 &&
              under + 1 < name.size();
    if (ok) {
      const auto* b0 = name.data() + 1;
      const auto* b1 = name.data() + under;
      const auto* e0 = name.data() + under + 1;
      const auto* e1 = name.data() + name.size();
      const auto rb = std::from_chars(b0, b1, block);
      const auto re = std::from_chars(e0, e1, entry);
      ok = rb.ec == std::errc() && rb.ptr == b1 && re.ec == std::errc() && re.ptr == e1;
    }
    if (!ok) fail("unknown identifier '" + name + "'", column);
    if (block < 1 || block > blocks_.size()) {
      fail("variable '" + name + "' refers to block " + std::to_string(block) + " but the system has " +
               std::to_string(blocks_.size()) + " blocks",
           column);
    }
    if (entry < 1 || entry > blocks_[block - 1]) {
      fail("variable '" + name + "' refers to entry " + std::to_string(entry) + " but block " +
               std::to_string(block) + " has size " + std::to_string(blocks_[block - 1]),
           column);
    }
    if (block > max_allowed_) {
      fail("block-order violation: '" + name + "' references block " + std::to_string(block) +
               " but only blocks 1.." + std::to_string(max_allowed_) + " are allowed here",
           column);
    }
    Node n;
    n.kind = Node::Kind::kVariable;
    n.slot = offsets_[block - 1] + entry - 1;
    max_block_ = std::max(max_block_, block);
    return n;
  }

  std::string_view text_;
  std::size_t line_;
  std::span<const std::size_t> blocks_;
  std::vector<std::size_t> offsets_;
  std::size_t pos_ = 0;
  Token tok_;
  std::vector<Node> nodes_;
  std::size_t max_allowed_;
  std::size_t max_block_ = 0;
};

}  // namespace

Expression::Expression(std::string source, std::vector<Node> nodes, std::size_t max_block)
    : source_(std::move(source)), nodes_(std::move(nodes)), max_block_(max_block) {}

double Expression::evaluate(std::span<const double> x) const {
  if (nodes_.empty()) throw ValidationError("evaluate: empty expression");
  return eval(static_cast<int>(nodes_.size()) - 1, x);
}

double Expression::eval(int idx, std::span<const double> x) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  switch (n.kind) {
    case Node::Kind::kNumber:
      return n.value;
    case Node::Kind::kVariable:
      return x[n.slot];
    case Node::Kind::kNeg:
      return -eval(n.lhs, x);
    case Node::Kind::kAdd:
      return checked(eval(n.lhs, x) + eval(n.rhs, x), "addition");
    case Node::Kind::kSub:
      return checked(eval(n.lhs, x) - eval(n.rhs, x), "subtraction");
    case Node::Kind::kMul:
      return checked(eval(n.lhs, x) * eval(n.rhs, x), "multiplication");
    case Node::Kind::kDiv: {
      const double num = eval(n.lhs, x);
      const double den = eval(n.rhs, x);
      if (den == 0.0) throw NumericalError("division by zero in '" + source_ + "'");
      return checked(num / den, "division");
    }
    case Node::Kind::kPow:
      return checked(ipow(eval(n.lhs, x), n.exponent), "power");
    case Node::Kind::kCall: {
      const double a = eval(n.lhs, x);
      switch (n.func) {
        case Func::kSin: return std::sin(a);
        case Func::kCos: return std::cos(a);
        case Func::kTanh: return std::tanh(a);
        case Func::kExp: return checked(std::exp(a), "exp");
        case Func::kAbs: return std::abs(a);
      }
    }
  }
  throw NumericalError("corrupt expression node");
}

Expression::Dual Expression::evaluate_directional(std::span<const double> x,
                                                  std::span<const double> dir) const {
  if (nodes_.empty()) throw ValidationError("evaluate: empty expression");
  return eval_dual(static_cast<int>(nodes_.size()) - 1, x, dir);
}

Expression::Dual Expression::eval_dual(int idx, std::span<const double> x,
                                       std::span<const double> dir) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  switch (n.kind) {
    case Node::Kind::kNumber:
      return {n.value, 0.0};
    case Node::Kind::kVariable:
      return {x[n.slot], dir[n.slot]};
    case Node::Kind::kNeg: {
      const Dual a = eval_dual(n.lhs, x, dir);
      return {-a.value, -a.slope};
    }
    case Node::Kind::kAdd: {
      const Dual a = eval_dual(n.lhs, x, dir), b = eval_dual(n.rhs, x, dir);
      return {checked(a.value + b.value, "addition"), a.slope + b.slope};
    }
    case Node::Kind::kSub: {
      const Dual a = eval_dual(n.lhs, x, dir), b = eval_dual(n.rhs, x, dir);
      return {checked(a.value - b.value, "subtraction"), a.slope - b.slope};
    }
    case Node::Kind::kMul: {
      const Dual a = eval_dual(n.lhs, x, dir), b = eval_dual(n.rhs, x, dir);
      return {checked(a.value * b.value, "multiplication"), a.slope * b.value + a.value * b.slope};
    }
    case Node::Kind::kDiv: {
      const Dual a = eval_dual(n.lhs, x, dir), b = eval_dual(n.rhs, x, dir);
      if (b.value == 0.0) throw NumericalError("division by zero in '" + source_ + "'");
      const double q = checked(a.value / b.value, "division");
      return {q, (a.slope - q * b.slope) / b.value};
    }
    case Node::Kind::kPow: {
      const Dual a = eval_dual(n.lhs, x, dir);
      const double lower = ipow(a.value, n.exponent - 1);
      return {checked(lower * a.value, "power"), n.exponent * lower * a.slope};
    }
    case Node::Kind::kCall: {
      const Dual a = eval_dual(n.lhs, x, dir);
      switch (n.func) {
        case Func::kSin: return {std::sin(a.value), std::cos(a.value) * a.slope};
        case Func::kCos: return {std::cos(a.value), -std::sin(a.value) * a.slope};
        case Func::kTanh: {
          const double t = std::tanh(a.value);
          return {t, (1.0 - t * t) * a.slope};
        }
        case Func::kExp: {
          const double e = checked(std::exp(a.value), "exp");
          return {e, e * a.slope};
        }
        case Func::kAbs: {
          const double s = a.value > 0.0 ? 1.0 : (a.value < 0.0 ? -1.0 : 0.0);
          return {std::abs(a.value), s * a.slope};
        }
      }
    }
  }
  throw NumericalError("corrupt expression node");
}

Expression parse_expression(std::string_view text, std::size_t line,
                            std::span<const std::size_t> block_sizes, std::size_t max_allowed_block) {
  return Parser(text, line, block_sizes, std::min(max_allowed_block, block_sizes.size())).parse();
}

}  // namespace ptonet::expr
