#pragma once

#include <cstddef>

#include "ptonet/numerics.hpp"

namespace ptonet::graph {

using numerics::DenseMatrix;
using numerics::Vector;

// Communication digraph. Entry a(i, j) > 0 means node i receives from node j.
// Construct through validate_digraph(); every field is derived and checked.
struct ValidatedDigraph {
  std::size_t node_count = 0;
  DenseMatrix adjacency;
  DenseMatrix laplacian;  // diag(row sums of adjacency) - adjacency
  Vector r;               // positive left null vector of the Laplacian, r . 1 = N
  DenseMatrix R;          // diag(r)
  DenseMatrix lhat;       // R L + L^T R, positive semidefinite
  double lhat_lambda_min = 0.0;
};

// Square, finite, nonnegative, zero diagonal. Throws ValidationError.
void check_adjacency(const DenseMatrix& adjacency);

// Single-pass Tarjan SCC count over positive-weight edges.
bool strongly_connected(const DenseMatrix& adjacency);

DenseMatrix build_laplacian(const DenseMatrix& adjacency);

// Throws NumericalError("graph not strongly connected or numerically
// degenerate") when the left null space is not one-dimensional or the
// normalized vector has a nonpositive entry.
Vector left_eigenvector(const DenseMatrix& laplacian);

// Throws NumericalError naming the offending eigenvalue when the PSD check
// fails below -1e-8.
DenseMatrix build_lhat(const DenseMatrix& laplacian, const Vector& r);

// Runs every step above and enforces the ValidatedDigraph invariants.
ValidatedDigraph validate_digraph(const DenseMatrix& adjacency);

}  // namespace ptonet::graph
