#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ptonet/gains.hpp"
#include "ptonet/graph.hpp"
#include "ptonet/numerics.hpp"
#include "ptonet/plant.hpp"

namespace ptonet::synthesis {

using numerics::DenseMatrix;
using numerics::Vector;

// Stacked data of the design inequalities for n states and N observers.
struct LMIProblem {
  std::size_t n = 0;
  std::size_t N = 0;
  DenseMatrix a_bar;        // I_N (x) A, nN x nN
  std::vector<Vector> h_rows;  // H^1..H^N, the diagonal blocks of H_underline
  DenseMatrix h_under;      // N x nN, diag(H^1..H^N)
  DenseMatrix rl_kron;      // (R L) (x) I_n
  Vector d_bar;             // diagonal of D_bar, length nN
  double kf = 0.0;
  double T = 1.0;
  unsigned m = 1;
  double mu_star = 1.0;
  double t0 = 0.0;

  std::size_t dim() const { return n * N; }
  // 2 kf T / (mu* (1 + m)): the smallest eps2 allowed per unit eps3.
  double eps2_ratio() const;
};

// Throws ValidationError on dimension mismatch or mu_star < 1.
LMIProblem assemble_problem(const plant::PlantModel& plant, const graph::ValidatedDigraph& graph,
                            const gains::GainSchedule& schedule, double kf, double mu_star);

struct LMICertificate {
  std::vector<DenseMatrix> p_blocks;  // N symmetric n x n
  std::vector<Vector> q_rows;         // N rows of length n
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps3 = 0.0;
  double mu_star = 1.0;
  double t_star = 0.0;

  DenseMatrix p_full() const;
};

struct CheckResult {
  std::string name;
  double margin = 0.0;  // >= 0 means satisfied
  bool passed = false;
};

struct VerificationReport {
  std::vector<CheckResult> checks;  // P > 0, injection, dilation, upper bound, prescribed time
  bool scalars_positive = false;    // eps1, eps2, eps3 > 0
  bool passed = false;
  double tolerance = 0.0;
};

// Left-hand matrix of the output-injection inequality,
// sym(P A_bar - Q^T H_under - P (RL (x) I_n)).
DenseMatrix injection_lmi_matrix(const LMIProblem& problem, const LMICertificate& cert);

VerificationReport verify_certificate(const LMIProblem& problem, const LMICertificate& cert,
                                      double tol = 1e-7);

struct SolveOptions {
  std::size_t max_iterations = 3000;  // per eps1 attempt
  std::size_t check_every = 10;
  double tolerance = 1e-7;
  double eps1_start = 1e-3;
  double eps1_min = 1e-6;
  double eps2_floor = 1e-3;
  // Bound on |Q_i|; keeps gains L^i = P_i^{-1} Q_i^T moderate. <= 0 disables.
  double q_norm_bound = 2.0;
  // Cone targets are shifted by this factor above the required margins so
  // that iterates land strictly inside the feasible set.
  double interior_factor = 1.2;
  double upper_shift = 0.01;
  std::size_t growth_steps = 8;
  std::size_t bisection_steps = 6;
};

enum class SolveStatus { kFeasible, kUndecided };

struct SolveResult {
  SolveStatus status = SolveStatus::kUndecided;
  std::optional<LMICertificate> certificate;
  std::string blocking_constraint;  // empty on success
  std::string message;
  std::vector<CheckResult> residuals;  // margins at the last iterate
  std::size_t iterations = 0;
  std::size_t attempts = 0;
};

// Fixes eps3 = 1, eps2 = max(2 kf T / (mu* (1 + m)), eps2_floor), then
// searches (P, Q) by Douglas-Rachford splitting between the affine image of
// (P, Q) and the product of shifted semidefinite cones; eps1 is pushed up by
// growth and bisection. A returned certificate always passes
// verify_certificate at options.tolerance. Never claims infeasibility.
SolveResult solve_feasibility(const LMIProblem& problem, const SolveOptions& options = {});

// Smallest mu* in `grid` (ascending order) for which solve_feasibility
// succeeds; the last attempt's result if none does.
SolveResult search_mu_star(LMIProblem problem, const std::vector<double>& grid,
                           const SolveOptions& options = {});

struct ObserverGains {
  std::vector<Vector> L;  // N columns of length n
};

// L^i = P_i^{-1} Q_i^T by Cholesky. Throws NumericalError with a condition
// estimate when P_i is numerically singular.
ObserverGains extract_gains(const LMICertificate& cert);

// t* = t0 + T (1 - 1/mu*). Throws DomainError for mu* < 1.
double pick_t_star(double mu_star, const gains::GainSchedule& schedule);

}  // namespace ptonet::synthesis
