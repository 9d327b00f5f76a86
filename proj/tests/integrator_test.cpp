#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ptonet/error.hpp"
#include "ptonet/integrator.hpp"

namespace ptonet::simulation {
namespace {

TEST(Integrator, ExponentialDecay) {
  const Rhs rhs = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = -2.0 * y[0]; };
  const std::vector<double> out{0.0, 0.25, 0.5, 1.0};
  const auto r = integrate(rhs, 0.0, {1.0}, 1.0, out, IntegratorOptions{});
  ASSERT_FALSE(r.truncated);
  ASSERT_EQ(r.times.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(r.states[k][0], std::exp(-2.0 * out[k]), 1e-8);
  EXPECT_DOUBLE_EQ(r.final_time, 1.0);
}

TEST(Integrator, HarmonicOscillatorDenseOutput) {
  const Rhs rhs = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  std::vector<double> out;
  for (int k = 0; k <= 100; ++k) out.push_back(0.1 * k);
  IntegratorOptions o;
  o.rel_tol = 1e-10;
  o.abs_tol = 1e-12;
  const auto r = integrate(rhs, 0.0, {1.0, 0.0}, 10.0, out, o);
  for (std::size_t k = 0; k < out.size(); ++k) {
    EXPECT_NEAR(r.states[k][0], std::cos(out[k]), 1e-7);
    EXPECT_NEAR(r.states[k][1], -std::sin(out[k]), 1e-7);
  }
}

TEST(Integrator, RelativeOnlyControlTracksTinyStates) {
  const Rhs rhs = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = -y[0]; };
  IntegratorOptions o;
  o.abs_tol = std::numeric_limits<double>::min();
  const std::vector<double> out{5.0};
  const auto r = integrate(rhs, 0.0, {1e-200}, 5.0, out, o);
  EXPECT_NEAR(r.states[0][0] / (1e-200 * std::exp(-5.0)), 1.0, 1e-6);
}

TEST(Integrator, BlowUpTruncates) {
  const Rhs rhs = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0] * y[0]; };
  const std::vector<double> out{0.5, 1.5};
  const auto r = integrate(rhs, 0.0, {1.0}, 2.0, out, IntegratorOptions{});
  EXPECT_TRUE(r.truncated);
  EXPECT_FALSE(r.diagnostic.empty());
  ASSERT_EQ(r.times.size(), 1u);
  EXPECT_NEAR(r.states[0][0], 2.0, 1e-6);
  EXPECT_LT(r.final_time, 1.0 + 1e-6);
}

TEST(Integrator, NonFiniteInitialDerivativeThrows) {
  const Rhs rhs = [](double, std::span<const double>, std::span<double> dy) { dy[0] = std::nan(""); };
  EXPECT_THROW(integrate(rhs, 0.0, {1.0}, 1.0, {}, IntegratorOptions{}), NumericalError);
}

TEST(Integrator, OptionValidation) {
  IntegratorOptions o;
  o.rel_tol = 1e-15;
  EXPECT_THROW(o.validate(), ValidationError);
  o = {};
  o.abs_tol = -1.0;
  EXPECT_THROW(o.validate(), ValidationError);
  o = {};
  o.max_step = -1.0;
  EXPECT_THROW(o.validate(), ValidationError);
}

}  // namespace
}  // namespace ptonet::simulation
