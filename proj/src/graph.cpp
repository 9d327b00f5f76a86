#include "ptonet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "ptonet/error.hpp"

namespace ptonet::graph {

void check_adjacency(const DenseMatrix& adjacency) {
  if (!adjacency.square()) throw ValidationError("adjacency matrix must be square");
  if (adjacency.rows() == 0) throw ValidationError("graph must have at least one node");
  for (std::size_t i = 0; i < adjacency.rows(); ++i) {
    for (std::size_t j = 0; j < adjacency.cols(); ++j) {
      const double a = adjacency(i, j);
      std::ostringstream where;
      where << "adjacency(" << i + 1 << "," << j + 1 << ")";
      if (!std::isfinite(a)) throw ValidationError(where.str() + " is not finite");
      if (a < 0.0) throw ValidationError(where.str() + " is negative");
      if (i == j && a != 0.0) throw ValidationError(where.str() + " (self loop) must be zero");
    }
  }
}

bool strongly_connected(const DenseMatrix& adjacency) {
  check_adjacency(adjacency);
  const std::size_t n = adjacency.rows();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0;
  std::size_t components = 0;

  // Recursion depth is bounded by N, which stays small for sensor graphs.
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w = 0; w < n; ++w) {
      if (!(adjacency(v, w) > 0.0)) continue;
      if (index[w] == kUnvisited) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      ++components;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
      } while (w != v);
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (index[v] == kUnvisited) visit(v);
  }
  return components == 1;
}

DenseMatrix build_laplacian(const DenseMatrix& adjacency) {
  check_adjacency(adjacency);
  const std::size_t n = adjacency.rows();
  DenseMatrix lap(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      degree += adjacency(i, j);
      lap(i, j) = -adjacency(i, j);
    }
    lap(i, i) = degree;
  }
  return lap;
}

Vector left_eigenvector(const DenseMatrix& laplacian) {
  const std::size_t n = laplacian.rows();
  const DenseMatrix basis = numerics::null_space(laplacian.transpose(), 1e-10);
  if (basis.cols() != 1) {
    throw NumericalError("graph not strongly connected or numerically degenerate (left null space dimension " +
                         std::to_string(basis.cols()) + ")");
  }
  Vector r = basis.column_vector(0);
  if (r[0] < 0.0) {
    for (double& v : r) v = -v;
  }
  double sum = 0.0;
  for (double v : r) sum += v;
  if (!(sum > 0.0)) throw NumericalError("graph not strongly connected or numerically degenerate");
  for (double& v : r) v *= static_cast<double>(n) / sum;
  for (double v : r) {
    if (!(v > 0.0)) throw NumericalError("graph not strongly connected or numerically degenerate");
  }
  return r;
}

DenseMatrix build_lhat(const DenseMatrix& laplacian, const Vector& r) {
  const DenseMatrix R = DenseMatrix::diagonal(r);
  DenseMatrix rl = R * laplacian;
  DenseMatrix lhat = rl + rl.transpose();
  const double lmin = numerics::lambda_min(lhat);
  if (lmin < -numerics::kSemidefiniteTol) {
    std::ostringstream os;
    os << "Lhat is not positive semidefinite: lambda_min = " << lmin;
    throw NumericalError(os.str());
  }
  return lhat;
}

ValidatedDigraph validate_digraph(const DenseMatrix& adjacency) {
  if (!strongly_connected(adjacency)) {
    throw ValidationError("communication graph is not strongly connected");
  }
  ValidatedDigraph g;
  g.node_count = adjacency.rows();
  g.adjacency = adjacency;
  g.laplacian = build_laplacian(adjacency);
  g.r = left_eigenvector(g.laplacian);
  g.R = DenseMatrix::diagonal(g.r);
  g.lhat = build_lhat(g.laplacian, g.r);
  g.lhat_lambda_min = numerics::lambda_min(g.lhat);

  const double scale = std::max(1.0, adjacency.max_abs());
  const Vector ones(g.node_count, 1.0);
  const Vector row_sums = g.laplacian * ones;
  const Vector rl = g.laplacian.transpose() * g.r;
  const Vector lhat_ones = g.lhat * ones;
  if (numerics::norm_inf(row_sums) > 1e-12 * scale * static_cast<double>(g.node_count) ||
      numerics::norm_inf(rl) > 1e-9 * scale || numerics::norm_inf(lhat_ones) > 1e-9 * scale) {
    throw NumericalError("graph spectral invariants violated beyond tolerance");
  }
  return g;
}

}  // namespace ptonet::graph
