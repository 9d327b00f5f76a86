#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "ptonet/error.hpp"
#include "ptonet/scenario.hpp"
#include "ptonet/simulation.hpp"

namespace ptonet::simulation {
namespace {

Scenario example(double delta) {
  auto file = scenario::example_scenario(true);
  file.schedule.delta = delta;
  file.output.grid = 200;
  const auto plant = scenario::build_plant(file);
  const auto graph = graph::validate_digraph(file.adjacency);
  return scenario::build_simulation(file, plant, graph, *file.gains);
}

// Single observer, one double-integrator block, phi = 0.
Scenario single_linear(const Vector& L) {
  const plant::CanonicalStructure st({2});
  Scenario sc;
  sc.plant = plant::make_plant(st, plant::parse_nonlinearity("0", st, {0.0}));
  sc.graph = graph::validate_digraph(DenseMatrix(1, 1));
  sc.schedule.T = 1.0;
  sc.schedule.m = 1;
  sc.schedule.delta = 0.5;
  sc.gains.L = {L};
  sc.x0 = {1.0, -0.5};
  sc.z0 = {{0.0, 0.0}};
  sc.grid_points = 50;
  sc.integrator.rel_tol = 1e-11;
  sc.integrator.abs_tol = 1e-13;
  return sc;
}

TEST(Simulation, ZeroErrorIsInvariant) {
  auto sc = example(0.5);
  for (auto& z : sc.z0) z = sc.x0;
  const auto tr = simulate(sc);
  ASSERT_FALSE(tr.truncated);
  for (const auto& e : tr.e)
    for (double v : e) EXPECT_EQ(v, 0.0);
}

TEST(Simulation, LinearSingleObserverMatchesRk4) {
  const Vector L{3.0, 2.0};
  const auto sc = single_linear(L);
  const auto tr = simulate(sc);
  ASSERT_FALSE(tr.truncated);

  // Fixed-step RK4 on (x1, x2, z1, z2), many substeps per output interval.
  auto f = [&](double t, const std::array<double, 4>& s) {
    const double mu = 1.0 / (1.0 - t);
    const double g1 = mu * mu, g2 = g1 * g1;
    const double innov = s[0] - s[2];
    return std::array<double, 4>{s[1], 0.0, s[3] + g1 * L[0] * innov, g2 * L[1] * innov};
  };
  std::array<double, 4> s{1.0, -0.5, 0.0, 0.0};
  double t = 0.0;
  const std::size_t sub = 400;
  for (std::size_t k = 1; k < tr.times.size(); ++k) {
    const double target = tr.times[k];
    const double h = (target - t) / static_cast<double>(sub);
    for (std::size_t j = 0; j < sub; ++j) {
      auto add = [](const std::array<double, 4>& a, const std::array<double, 4>& b, double c) {
        return std::array<double, 4>{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]};
      };
      const auto k1 = f(t, s);
      const auto k2 = f(t + h / 2, add(s, k1, h / 2));
      const auto k3 = f(t + h / 2, add(s, k2, h / 2));
      const auto k4 = f(t + h, add(s, k3, h));
      for (int c = 0; c < 4; ++c) s[c] += h / 6 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
      t += h;
    }
    t = target;
    EXPECT_NEAR(tr.z[k][0], s[2], 1e-8) << "t=" << target;
    EXPECT_NEAR(tr.z[k][1], s[3], 1e-8) << "t=" << target;
  }
}

TEST(Simulation, ErrorRhsMatchesCoupledDifference) {
  const auto sc = example(0.005);
  const std::size_t n = sc.x0.size(), N = sc.z0.size();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double t : {0.0, 1.0, 1.9}) {
    Vector state(n * (N + 1));
    for (auto& v : state) v = u(rng);
    const Vector d = rhs_coupled(t, state, sc);
    const std::span<const double> x(state.data(), n);
    Vector e(n * N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < n; ++k) e[i * n + k] = state[k] - state[n + i * n + k];
    const Vector de = error_dynamics_rhs(t, x, e, sc);
    double scale = 1.0;
    for (double v : d) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < n; ++k)
        EXPECT_NEAR(de[i * n + k], d[k] - d[n + i * n + k], 1e-10 * scale) << "t=" << t;
  }
}

TEST(Simulation, ZetaRoundTrip) {
  auto tr = simulate(example(0.5));
  const auto sc = example(0.5);
  transform_zeta(tr, sc.schedule, sc.plant.structure);
  const std::size_t n = sc.x0.size();
  for (std::size_t k = 0; k < tr.times.size(); k += 17) {
    const Vector g = gains::gamma_diag(tr.mu[k], sc.schedule, sc.plant.structure);
    for (std::size_t j = 0; j < tr.e[k].size(); ++j) {
      const double back = g[j % n] * tr.zeta[k][j];
      EXPECT_NEAR(back, tr.e[k][j], 1e-9 * (1.0 + std::abs(tr.e[k][j])));
    }
  }
}

TEST(Simulation, EnvelopeBoundDecreases) {
  DecayEnvelope env;
  env.omega = 2.0;
  env.alpha = 0.5;
  env.reference = 1.0;
  env.mu_star = 10.0;
  env.m = 2;
  EXPECT_DOUBLE_EQ(env.bound(10.0), 2.0);
  EXPECT_LT(env.bound(20.0), env.bound(15.0));
  EXPECT_NEAR(env.bound(20.0), 2.0 * std::exp(-0.5 * (400.0 - 100.0)), 1e-300);
}

TEST(Simulation, LipschitzBoundSamplesOnExampleBox) {
  const auto sc = example(0.005);
  const std::vector<plant::Interval> box{{-1.1, 1.1}, {-2, 2}, {-1, 1}, {-1, 1}, {-1, 1}, {-2, 2}};
  const auto rep = check_lipschitz_bound(sc.plant, sc.schedule, box, 500, 5);
  EXPECT_EQ(rep.samples, 500u);
  EXPECT_TRUE(rep.passed());
  EXPECT_LE(rep.max_stacked_ratio, 1.0);
  const std::vector<plant::Interval> wide(6, {-5.0, 5.0});
  EXPECT_FALSE(check_lipschitz_bound(sc.plant, sc.schedule, wide, 10, 5).warning.empty());
}

TEST(Simulation, GridContainsExtraTimes) {
  auto sc = example(0.005);
  sc.extra_times = {1.98, 5.0};
  const auto grid = sc.output_grid();
  EXPECT_EQ(grid.front(), 0.0);
  EXPECT_DOUBLE_EQ(grid.back(), sc.t_end());
  EXPECT_NE(std::find(grid.begin(), grid.end(), 1.98), grid.end());
  EXPECT_EQ(std::find(grid.begin(), grid.end(), 5.0), grid.end());
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
}

TEST(Simulation, ScenarioValidation) {
  auto sc = example(0.5);
  sc.x0.pop_back();
  EXPECT_THROW(sc.validate(), ValidationError);
  sc = example(0.5);
  sc.gains.L.pop_back();
  EXPECT_THROW(sc.validate(), ValidationError);
}

TEST(Simulation, HelpersAndCsv) {
  EXPECT_DOUBLE_EQ(relative_sup_deviation({{1.0, 2.0}}, {{1.0, 4.0}}), 0.5);
  Trajectory tr;
  tr.times = {0.0, 1.0};
  tr.mu = {1.0, 2.0};
  tr.x = {{1.0}, {2.0}};
  tr.z = {{0.0}, {1.5}};
  tr.e = {{1.0}, {0.5}};
  tr.zeta = tr.e;
  EXPECT_DOUBLE_EQ(terminal_error_ratio(tr, 1), 0.5);
  const auto box = trajectory_box(tr, 0.1);
  EXPECT_DOUBLE_EQ(box[0].first, 0.9);
  EXPECT_DOUBLE_EQ(box[0].second, 2.1);
  std::ostringstream os;
  write_csv(os, tr, 1, 1);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,mu,x_1,z1_1,err_norm_1,zeta_norm,V,envelope");
  EXPECT_NE(csv.find("nan"), std::string::npos);
}

}  // namespace
}  // namespace ptonet::simulation
