#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ptonet/error.hpp"
#include "ptonet/numerics.hpp"

namespace ptonet::numerics {
namespace {

DenseMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> g;
  DenseMatrix m(r, c);
  for (auto& v : m.data()) v = g(rng);
  return m;
}

DenseMatrix random_symmetric(std::mt19937_64& rng, std::size_t n) { return random_matrix(rng, n, n).sym(); }

TEST(DenseMatrix, ProductMatchesHandComputed) {
  const DenseMatrix a{{1, 2}, {3, 4}};
  const DenseMatrix b{{0, 1}, {1, 0}};
  EXPECT_EQ(a * b, (DenseMatrix{{2, 1}, {4, 3}}));
  const Vector v = a * std::vector<double>{1.0, -1.0};
  EXPECT_DOUBLE_EQ(v[0], -1.0);
  EXPECT_DOUBLE_EQ(v[1], -1.0);
}

TEST(DenseMatrix, KronOfIdentities) {
  const auto k = kron(DenseMatrix::identity(2), DenseMatrix{{1, 2}, {3, 4}});
  ASSERT_EQ(k.rows(), 4u);
  EXPECT_EQ(k(2, 3), 2.0);
  EXPECT_EQ(k(3, 2), 3.0);
  EXPECT_EQ(k(0, 2), 0.0);
}

TEST(DenseMatrix, BlocksRoundTrip) {
  DenseMatrix m(4, 4);
  const DenseMatrix b{{1, 2}, {3, 4}};
  m.set_block(1, 2, b);
  EXPECT_EQ(m.block(1, 2, 2, 2), b);
  const DenseMatrix blocks[] = {b, DenseMatrix::identity(1)};
  const auto d = block_diagonal(blocks);
  EXPECT_EQ(d.rows(), 3u);
  EXPECT_EQ(d(2, 2), 1.0);
  EXPECT_EQ(d(0, 2), 0.0);
}

TEST(SymEigen, DiagonalAndKnownSpectrum) {
  const DenseMatrix m{{2, 1}, {1, 2}};
  const auto ev = sym_eigenvalues(m);
  EXPECT_NEAR(ev[0], 1.0, 1e-14);
  EXPECT_NEAR(ev[1], 3.0, 1e-14);
}

TEST(SymEigen, RandomReconstructionAndOrthogonality) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_symmetric(rng, 3 + trial % 6);
    const auto r = sym_eigen(s);
    const std::size_t n = s.rows();
    const auto& q = r.eigenvectors;
    const auto qtq = q.transpose() * q;
    EXPECT_LT((qtq - DenseMatrix::identity(n)).max_abs(), 1e-12);
    const auto back = q * DenseMatrix::diagonal(r.eigenvalues) * q.transpose();
    EXPECT_LT((back - s).max_abs(), 1e-12 * (1.0 + s.max_abs()));
    for (std::size_t k = 1; k < n; ++k) EXPECT_LE(r.eigenvalues[k - 1], r.eigenvalues[k]);
    // trace invariance
    double tr = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) tr += s(k, k), sum += r.eigenvalues[k];
    EXPECT_NEAR(tr, sum, 1e-12 * n * (1.0 + s.max_abs()));
  }
}

TEST(SymEigen, RejectsNonFinite) {
  DenseMatrix m = DenseMatrix::identity(2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(sym_eigen(m), ValidationError);
}

TEST(Svd, SingularValuesAreRootsOfGramEigenvalues) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_matrix(rng, 6, 4);
    const auto s = svd(m);
    auto ev = sym_eigenvalues(m.transpose() * m);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(s.singular_values[k], std::sqrt(ev[3 - k]), 1e-10);
  }
}

TEST(Svd, RankDeficientConverges) {
  // Columns 2 and 3 repeat column 1; two exactly zero columns.
  DenseMatrix m(5, 5);
  for (std::size_t r = 0; r < 5; ++r) {
    m(r, 0) = r + 1.0;
    m(r, 1) = 2.0 * (r + 1.0);
    m(r, 2) = -(r + 1.0);
  }
  EXPECT_EQ(rank(m, 1e-10), 1u);
  const auto ns = null_space(m, 1e-10);
  EXPECT_EQ(ns.cols(), 4u);
  EXPECT_LT((m * ns).max_abs(), 1e-12);
}

TEST(ProjectPsd, ProjectsOntoShiftedCone) {
  std::mt19937_64 rng(3);
  const auto s = random_symmetric(rng, 5);
  const auto p = project_psd(s, 0.5);
  EXPECT_GE(lambda_min(p), 0.5 - 1e-12);
  // Idempotent on its image.
  EXPECT_LT((project_psd(p, 0.5) - p).max_abs(), 1e-12);
}

TEST(Cholesky, SolvesSpdSystem) {
  std::mt19937_64 rng(5);
  const auto g = random_matrix(rng, 5, 5);
  const auto a = g * g.transpose() + DenseMatrix::identity(5);
  const auto l = cholesky(a);
  const Vector b{1, 2, 3, 4, 5};
  const Vector x = cholesky_solve(l, b);
  const Vector ax = a * x;
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(ax[i], b[i], 1e-11);
}

TEST(Cholesky, RejectsIndefinite) {
  EXPECT_THROW(cholesky(DenseMatrix{{1, 2}, {2, 1}}), NumericalError);
}

TEST(Norms, Basics) {
  const Vector v{3, -4};
  EXPECT_DOUBLE_EQ(norm2(v), 5.0);
  EXPECT_DOUBLE_EQ(norm_inf(v), 4.0);
  EXPECT_DOUBLE_EQ(dot(v, v), 25.0);
  EXPECT_DOUBLE_EQ(asymmetry(DenseMatrix{{0, 1}, {0, 0}}), 1.0);
}

}  // namespace
}  // namespace ptonet::numerics
