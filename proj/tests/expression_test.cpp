#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ptonet/error.hpp"
#include "ptonet/expression.hpp"

namespace ptonet::expr {
namespace {

const std::vector<std::size_t> kBlocks{2, 1, 2};

double eval(std::string_view text, std::span<const double> x) {
  return parse_expression(text, 1, kBlocks).evaluate(x);
}

TEST(Expression, PrecedenceAndAssociativity) {
  const std::vector<double> x{2.0, 3.0, 5.0, 7.0, 11.0};
  EXPECT_DOUBLE_EQ(eval("1 + 2*3", x), 7.0);
  EXPECT_DOUBLE_EQ(eval("8 - 3 - 2", x), 3.0);
  EXPECT_DOUBLE_EQ(eval("8 / 4 / 2", x), 1.0);
  EXPECT_DOUBLE_EQ(eval("-x1_1^2", x), -4.0);
  EXPECT_DOUBLE_EQ(eval("(-x1_1)^2", x), 4.0);
  EXPECT_DOUBLE_EQ(eval("x1_2*x2_1 - x3_2", x), 3.0 * 5.0 - 11.0);
  EXPECT_DOUBLE_EQ(eval("2.5e-1 * x3_1", x), 1.75);
}

TEST(Expression, Functions) {
  const std::vector<double> x{0.3, -0.7, 0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(eval("sin(x1_1) + cos(x1_2)", x), std::sin(0.3) + std::cos(-0.7));
  EXPECT_DOUBLE_EQ(eval("tanh(x1_2)*exp(x1_1)", x), std::tanh(-0.7) * std::exp(0.3));
  EXPECT_DOUBLE_EQ(eval("abs(x1_2)", x), 0.7);
}

TEST(Expression, MaxBlockTracked) {
  EXPECT_EQ(parse_expression("3", 1, kBlocks).max_block(), 0u);
  EXPECT_EQ(parse_expression("x1_1 + x3_2", 1, kBlocks).max_block(), 3u);
}

TEST(Expression, TriangularityEnforced) {
  EXPECT_NO_THROW(parse_expression("x2_1", 2, kBlocks, 2));
  EXPECT_THROW(parse_expression("x3_1", 2, kBlocks, 2), ValidationError);
}

TEST(Expression, ParseErrorsCarryPosition) {
  try {
    parse_expression("x1_1 + * 2", 4, kBlocks);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(e.column(), 8u);
  }
  EXPECT_THROW(parse_expression("x4_1", 1, kBlocks), ParseError);
  EXPECT_THROW(parse_expression("x1_3", 1, kBlocks), ParseError);
  EXPECT_THROW(parse_expression("log(x1_1)", 1, kBlocks), ParseError);
  EXPECT_THROW(parse_expression("x1_1^0.5", 1, kBlocks), ParseError);
  EXPECT_THROW(parse_expression("(x1_1", 1, kBlocks), ParseError);
  EXPECT_THROW(parse_expression("", 1, kBlocks), ParseError);
}

TEST(Expression, ZeroDenominatorIsNumericalError) {
  const std::vector<double> x{0.0, 1.0, 0.0, 0.0, 0.0};
  EXPECT_THROW(eval("x1_2 / x1_1", x), NumericalError);
}

TEST(Expression, DirectionalDerivativeMatchesCentralDifference) {
  const auto e = parse_expression("sin(x1_1*x1_2) + x2_1^3/(1 + x3_1^2) - tanh(abs(x3_2))", 1, kBlocks);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(5), d(5);
    for (auto& v : x) v = u(rng);
    for (auto& v : d) v = u(rng);
    const auto dual = e.evaluate_directional(x, d);
    EXPECT_DOUBLE_EQ(dual.value, e.evaluate(x));
    const double h = 1e-6;
    std::vector<double> xp(x), xm(x);
    for (std::size_t k = 0; k < 5; ++k) xp[k] += h * d[k], xm[k] -= h * d[k];
    const double fd = (e.evaluate(xp) - e.evaluate(xm)) / (2 * h);
    EXPECT_NEAR(dual.slope, fd, 1e-6 * (1.0 + std::abs(fd)));
  }
}

}  // namespace
}  // namespace ptonet::expr
