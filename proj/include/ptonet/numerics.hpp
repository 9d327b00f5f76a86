#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ptonet::numerics {

using Vector = std::vector<double>;

// Row-major dense matrix with finite entries. Sizes here stay below ~100, so
// everything is plain loops over a contiguous buffer.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);
  static DenseMatrix column(std::span<const double> v);
  static DenseMatrix row(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  bool empty() const { return entries_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

  std::span<const double> data() const { return entries_; }
  std::span<double> data() { return entries_; }
  Vector row_vector(std::size_t r) const;
  Vector column_vector(std::size_t c) const;

  DenseMatrix transpose() const;
  // A + A^T, the symmetric part convention used by the LMIs.
  DenseMatrix sym() const;
  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const DenseMatrix& b);

  DenseMatrix& operator+=(const DenseMatrix& o);
  DenseMatrix& operator-=(const DenseMatrix& o);
  DenseMatrix& operator*=(double s);

  bool all_finite() const;
  double max_abs() const;
  double frobenius_norm() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(DenseMatrix a, double s);
DenseMatrix operator*(double s, DenseMatrix a);
DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
Vector operator*(const DenseMatrix& a, std::span<const double> v);

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix block_diagonal(std::span<const DenseMatrix> blocks);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);

struct SymEigResult {
  Vector eigenvalues;        // ascending
  DenseMatrix eigenvectors;  // column k pairs with eigenvalues[k]
};

// Cyclic Jacobi. Throws ValidationError for non-square input or asymmetry
// beyond 1e-12 relative.
SymEigResult sym_eigen(const DenseMatrix& m);
// Eigenvalues only; same algorithm without accumulating rotations.
Vector sym_eigenvalues(const DenseMatrix& m);
double lambda_min(const DenseMatrix& m);
double lambda_max(const DenseMatrix& m);

// Singular values in descending order and the matching right singular
// vectors (columns of V), by one-sided Jacobi.
struct SvdResult {
  Vector singular_values;
  DenseMatrix right_vectors;
};
SvdResult svd(const DenseMatrix& m);

// Orthonormal basis of {v : M v ~ 0} as columns. Every basis vector satisfies
// ||M v|| <= tol * sigma_max(M).
DenseMatrix null_space(const DenseMatrix& m, double tol);
std::size_t rank(const DenseMatrix& m, double tol);

// Projection onto {S : S - shift*I >= 0} in the Frobenius metric.
DenseMatrix project_psd(const DenseMatrix& s, double shift = 0.0);

// Cholesky factor L (lower) with A = L L^T. Throws NumericalError if A is not
// numerically positive definite.
DenseMatrix cholesky(const DenseMatrix& a);
Vector cholesky_solve(const DenseMatrix& l, std::span<const double> b);

// Asymmetry |M - M^T|_max relative to max(1, |M|_max).
double asymmetry(const DenseMatrix& m);

inline constexpr double kDecompositionTol = 1e-10;
inline constexpr double kSemidefiniteTol = 1e-8;

}  // namespace ptonet::numerics
