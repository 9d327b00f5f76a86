#include <gtest/gtest.h>

#include <random>

#include "ptonet/error.hpp"
#include "ptonet/graph.hpp"
#include "ptonet/scenario.hpp"

namespace ptonet::graph {
namespace {

TEST(Graph, ExampleLeftEigenvector) {
  const auto file = scenario::example_scenario(false);
  const auto g = validate_digraph(file.adjacency);
  const Vector want{0.8, 1.6, 0.8, 0.8};
  ASSERT_EQ(g.r.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g.r[i], want[i], 1e-9);
}

TEST(Graph, TwoNodeClosedForm) {
  // r L = 0 gives r1 a12 = r2 a21, so r is proportional to (a21, a12).
  const double a12 = 3.0, a21 = 1.0;
  const auto g = validate_digraph(DenseMatrix{{0, a12}, {a21, 0}});
  const double s = 2.0 / (a12 + a21);
  EXPECT_NEAR(g.r[0], a21 * s, 1e-12);
  EXPECT_NEAR(g.r[1], a12 * s, 1e-12);
}

TEST(Graph, LaplacianConvention) {
  const auto l = build_laplacian(DenseMatrix{{0, 2, 0}, {0, 0, 1}, {4, 0, 0}});
  EXPECT_EQ(l(0, 0), 2.0);
  EXPECT_EQ(l(0, 1), -2.0);
  EXPECT_EQ(l(2, 0), -4.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(l(i, 0) + l(i, 1) + l(i, 2), 0.0);
}

TEST(Graph, RejectsDisconnected) {
  EXPECT_FALSE(strongly_connected(DenseMatrix{{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}));
  EXPECT_THROW(validate_digraph(DenseMatrix{{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}), ValidationError);
  // Directed chain: reachable one way only.
  EXPECT_THROW(validate_digraph(DenseMatrix{{0, 1}, {0, 0}}), ValidationError);
}

TEST(Graph, RejectsBadAdjacency) {
  EXPECT_THROW(check_adjacency(DenseMatrix{{0, -1}, {1, 0}}), ValidationError);
  EXPECT_THROW(check_adjacency(DenseMatrix{{1, 1}, {1, 0}}), ValidationError);
  EXPECT_THROW(check_adjacency(DenseMatrix(2, 3)), ValidationError);
}

TEST(Graph, RandomStronglyConnectedProperties) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> w(0.1, 5.0);
  std::bernoulli_distribution edge(0.3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 7;
    DenseMatrix a(n, n);
    // A directed ring guarantees strong connectivity.
    for (std::size_t i = 0; i < n; ++i) a(i, (i + 1) % n) = w(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && edge(rng)) a(i, j) = w(rng);
    const auto g = validate_digraph(a);
    double sum = 0.0;
    for (double v : g.r) {
      EXPECT_GT(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, static_cast<double>(n), 1e-10);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += g.r[i] * g.laplacian(i, j);
      EXPECT_NEAR(acc, 0.0, 1e-10);
    }
    EXPECT_GE(numerics::lambda_min(g.lhat), -1e-10);
    const Vector ones(n, 1.0);
    EXPECT_LT(numerics::norm_inf(g.lhat * ones), 1e-10);
  }
}

}  // namespace
}  // namespace ptonet::graph
