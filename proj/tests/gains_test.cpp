#include <gtest/gtest.h>

#include <cmath>

#include "ptonet/error.hpp"
#include "ptonet/gains.hpp"

namespace ptonet::gains {
namespace {

GainSchedule schedule(double T, unsigned m) {
  GainSchedule s;
  s.T = T;
  s.m = m;
  return s;
}

TEST(Mu, ExampleValues) {
  const auto s = schedule(2.0, 2);
  EXPECT_DOUBLE_EQ(mu(0.0, s).value, 1.0);
  EXPECT_DOUBLE_EQ(mu(1.0, s).value, 2.0);
  EXPECT_NEAR(mu(1.98, s).value, 100.0, 1e-12 * 100.0);
  EXPECT_FALSE(mu(1.98, s).clamped);
}

TEST(Mu, DomainAndClamp) {
  auto s = schedule(1.0, 1);
  EXPECT_THROW(mu(-0.1, s), DomainError);
  EXPECT_THROW(mu(1.0, s), DomainError);
  s.mu_cap = 10.0;
  const auto v = mu(0.95, s);
  EXPECT_TRUE(v.clamped);
  EXPECT_EQ(v.value, 10.0);
}

TEST(Schedule, Validation) {
  EXPECT_THROW(schedule(0.0, 1).validate(), ValidationError);
  EXPECT_THROW(schedule(1.0, 0).validate(), ValidationError);
  auto s = schedule(1.0, 1);
  s.delta = 1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s.delta = 0.25;
  EXPECT_DOUBLE_EQ(s.stop_time(), 0.75);
}

TEST(Gamma, DiagonalAndInverse) {
  const plant::CanonicalStructure st({2, 1});
  const auto s = schedule(1.0, 2);
  const Vector g = gamma_diag(2.0, s, st);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g[0], 8.0);
  EXPECT_DOUBLE_EQ(g[1], 64.0);
  EXPECT_DOUBLE_EQ(g[2], 8.0);
  const Vector gi = gamma_inverse_diag(2.0, s, st);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(g[k] * gi[k], 1.0);
}

TEST(Gamma, OverflowReported) {
  const plant::CanonicalStructure st({40});
  EXPECT_THROW(gamma_diag(1e8, schedule(1.0, 3), st), NumericalError);
  const Vector gi = gamma_inverse_diag(1e8, schedule(1.0, 3), st);
  EXPECT_GE(gi.back(), 0.0);
}

TEST(IntPower, MatchesStdPow) {
  for (unsigned k = 0; k < 20; ++k) EXPECT_NEAR(int_power(1.3, k), std::pow(1.3, k), 1e-12 * std::pow(1.3, k));
}

TEST(Dilation, CopiesBlocks) {
  const plant::CanonicalStructure st({2, 1});
  const auto d = build_dilation(st, 2);
  EXPECT_EQ(d.per_copy, (Vector{1, 2, 1}));
  EXPECT_EQ(d.full, (Vector{1, 2, 1, 1, 2, 1}));
}

}  // namespace
}  // namespace ptonet::gains
