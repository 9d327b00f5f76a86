#include <gtest/gtest.h>

#include <cmath>

#include "ptonet/error.hpp"
#include "ptonet/plant.hpp"

namespace ptonet::plant {
namespace {

TEST(Structure, OffsetsAndValidation) {
  const CanonicalStructure st({2, 1, 3});
  EXPECT_EQ(st.state_dim(), 6u);
  EXPECT_EQ(st.offset(2), 3u);
  EXPECT_THROW(CanonicalStructure(std::vector<std::size_t>{}), ValidationError);
  EXPECT_THROW(CanonicalStructure({2, 0}), ValidationError);
}

TEST(Canonical, ShiftBlocksAndSensors) {
  const CanonicalStructure st({2, 1, 2});
  const auto m = build_canonical(st);
  // Block 1: x1' = x2, x2' = phi_1.
  EXPECT_EQ(m.A(0, 1), 1.0);
  EXPECT_EQ(m.A(1, 2), 0.0);
  EXPECT_EQ(m.A(2, 2), 0.0);
  EXPECT_EQ(m.A(3, 4), 1.0);
  EXPECT_EQ(m.B(1, 0), 1.0);
  EXPECT_EQ(m.B(2, 1), 1.0);
  EXPECT_EQ(m.B(4, 2), 1.0);
  EXPECT_EQ(m.H(0, 0), 1.0);
  EXPECT_EQ(m.H(1, 2), 1.0);
  EXPECT_EQ(m.H(2, 3), 1.0);
  EXPECT_EQ(m.h_rows[2][3], 1.0);
}

TEST(Canonical, JointlyObservableButNotLocally) {
  const CanonicalStructure st({2, 1, 2});
  const auto m = build_canonical(st);
  EXPECT_TRUE(check_joint_observability(m.A, m.H).observable);
  for (std::size_t i = 0; i < st.subsystems(); ++i) {
    const auto single = DenseMatrix::row(m.h_rows[i]);
    EXPECT_FALSE(check_joint_observability(m.A, single).observable);
  }
}

TEST(Kf, ExampleValue) {
  const CanonicalStructure st({2, 1, 2, 1});
  const Vector g{6.0, std::sqrt(2.0), std::sqrt(6.0), std::sqrt(2.0)};
  // 4 * (12^2 + 2 + 24 + 2) = 688.
  EXPECT_NEAR(compute_kf(st, g), std::sqrt(688.0), 1e-12);
}

TEST(Nonlinearity, ParsesLinesAndEnforcesTriangularity) {
  const CanonicalStructure st({1, 2});
  const auto p = parse_nonlinearity("sin(x1_1)\nx1_1*x2_2\n", st, {1.0, 2.0});
  const Vector v = eval_nonlinearity(p, std::vector<double>{0.5, 1.0, 3.0});
  EXPECT_DOUBLE_EQ(v[0], std::sin(0.5));
  EXPECT_DOUBLE_EQ(v[1], 1.5);
  EXPECT_THROW(parse_nonlinearity("x2_1\n0", st, {1.0, 1.0}), ValidationError);
  EXPECT_THROW(parse_nonlinearity("0", st, {1.0, 1.0}), ValidationError);
  EXPECT_THROW(parse_nonlinearity("0\n0", st, {1.0}), ValidationError);
  EXPECT_THROW(parse_nonlinearity("0\n0", st, {1.0, -1.0}), ValidationError);
}

TEST(Nonlinearity, DifferenceKeepsRelativePrecisionForTinyErrors) {
  const CanonicalStructure st({2, 1});
  const auto p = parse_nonlinearity(std::vector<std::string>{"sin(x1_1)*x1_2", "tanh(x2_1) - x1_1^2"}, st,
                                    {2.0, 3.0});
  const std::vector<double> x{0.7, -1.2, 0.4};
  for (double scale : {1e-2, 1e-8, 1e-20, 1e-60}) {
    const std::vector<double> e{0.3 * scale, -0.5 * scale, 0.9 * scale};
    const Vector d = eval_nonlinearity_difference(p, x, e);
    // First-order oracle from the analytic gradient; exact to O(scale^2).
    const double g0 = std::cos(x[0]) * x[1] * e[0] + std::sin(x[0]) * e[1];
    const double th = std::tanh(x[2]);
    const double g1 = (1 - th * th) * e[2] - 2 * x[0] * e[0];
    const double tol = scale < 1e-12 ? 1e-10 : 10.0 * scale;
    EXPECT_NEAR(d[0] / g0, 1.0, tol) << scale;
    EXPECT_NEAR(d[1] / g1, 1.0, tol) << scale;
  }
  const Vector zero = eval_nonlinearity_difference(p, x, std::vector<double>(3, 0.0));
  EXPECT_EQ(zero[0], 0.0);
  EXPECT_EQ(zero[1], 0.0);
}

TEST(Lipschitz, EstimateIsLowerBoundForLinearMap) {
  const CanonicalStructure st({2});
  const auto p = parse_nonlinearity("3*x1_1 - 4*x1_2", st, {5.0});
  const auto est = estimate_lipschitz(p, st, {{-1, 1}, {-1, 1}}, 200, 3);
  EXPECT_FALSE(est.certified);
  EXPECT_NEAR(est.gamma_hat[0], 5.0, 1e-9);
  const auto again = estimate_lipschitz(p, st, {{-1, 1}, {-1, 1}}, 200, 3);
  EXPECT_EQ(est.gamma_hat, again.gamma_hat);
}

}  // namespace
}  // namespace ptonet::plant
