#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptonet/expression.hpp"
#include "ptonet/numerics.hpp"

namespace ptonet::plant {

using numerics::DenseMatrix;
using numerics::Vector;

// N subsystems with block sizes n_1..n_N, n = sum n_i.
class CanonicalStructure {
 public:
  CanonicalStructure() = default;
  // Throws ValidationError for an empty list or a zero block.
  explicit CanonicalStructure(std::vector<std::size_t> block_sizes);

  std::size_t subsystems() const { return blocks_.size(); }
  std::size_t state_dim() const { return n_; }
  const std::vector<std::size_t>& block_sizes() const { return blocks_; }
  std::size_t block_size(std::size_t i) const { return blocks_[i]; }
  // Flat index of the first entry of block i (0-based block index).
  std::size_t offset(std::size_t i) const { return offsets_[i]; }

 private:
  std::vector<std::size_t> blocks_;
  std::vector<std::size_t> offsets_;
  std::size_t n_ = 0;
};

struct CanonicalMatrices {
  DenseMatrix A;           // n x n, shift block per subsystem
  DenseMatrix B;           // n x N, unit vector on the last row of each block
  DenseMatrix H;           // N x n, unit row on the first entry of each block
  std::vector<Vector> h_rows;  // H^i as length-n rows
};

CanonicalMatrices build_canonical(const CanonicalStructure& structure);

using Interval = std::pair<double, double>;

// Triangular nonlinearity phi: R^n -> R^N with Lipschitz constants gamma_i.
struct NonlinearityProgram {
  std::vector<expr::Expression> expressions;
  Vector gammas;
  // Region on which the gammas are claimed valid; empty means global.
  std::vector<Interval> validity_box;
};

// One expression per line of `source` (exactly N lines; a single trailing
// newline is ignored). Expression i may only reference blocks 1..i.
NonlinearityProgram parse_nonlinearity(std::string_view source, const CanonicalStructure& structure,
                                       Vector gammas);
NonlinearityProgram parse_nonlinearity(const std::vector<std::string>& lines,
                                       const CanonicalStructure& structure, Vector gammas);

Vector eval_nonlinearity(const NonlinearityProgram& program, std::span<const double> x);

// phi(x) - phi(x - e), accurate to relative precision even when |e| is many
// orders of magnitude below |x| (quadrature of the directional derivative).
Vector eval_nonlinearity_difference(const NonlinearityProgram& program, std::span<const double> x,
                                    std::span<const double> e);

struct ObservabilityReport {
  bool observable = false;
  std::size_t rank = 0;
  std::size_t required = 0;
};

ObservabilityReport check_joint_observability(const DenseMatrix& A, const DenseMatrix& H);

// k_f = sqrt(N * sum_i (n_i gamma_i)^2).
double compute_kf(const CanonicalStructure& structure, std::span<const double> gammas);

struct LipschitzEstimate {
  Vector gamma_hat;  // per subsystem
  bool certified = false;  // sampled lower bound, never a certificate
  std::size_t samples = 0;
};

// Heuristic lower bound on each gamma_i from sampled difference quotients and
// exact gradient norms at the sample points of `box` (one interval per state
// entry). Deterministic for a fixed seed.
LipschitzEstimate estimate_lipschitz(const NonlinearityProgram& program,
                                     const CanonicalStructure& structure,
                                     const std::vector<Interval>& box, std::size_t sample_count,
                                     std::uint64_t seed = 1);

struct PlantModel {
  CanonicalStructure structure;
  CanonicalMatrices matrices;
  NonlinearityProgram nonlinearity;
};

PlantModel make_plant(CanonicalStructure structure, NonlinearityProgram nonlinearity);

}  // namespace ptonet::plant
