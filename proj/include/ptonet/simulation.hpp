#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ptonet/gains.hpp"
#include "ptonet/graph.hpp"
#include "ptonet/integrator.hpp"
#include "ptonet/plant.hpp"
#include "ptonet/synthesis.hpp"

namespace ptonet::simulation {

using numerics::DenseMatrix;

struct Scenario {
  plant::PlantModel plant;
  graph::ValidatedDigraph graph;
  gains::GainSchedule schedule;
  synthesis::ObserverGains gains;
  Vector x0;
  std::vector<Vector> z0;  // one n-vector per observer
  IntegratorOptions integrator;
  std::size_t grid_points = 2000;
  std::vector<double> extra_times;  // added to the uniform grid (e.g. t*)

  // Throws ValidationError on inconsistent dimensions or options.
  void validate() const;
  double t_end() const { return schedule.stop_time(); }
  // Uniform grid over [t0, t_end] merged with extra_times inside the window.
  std::vector<double> output_grid() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> mu;
  std::vector<Vector> x;     // plant state
  std::vector<Vector> z;     // observers stacked, length nN
  std::vector<Vector> e;     // x - z^i stacked
  std::vector<Vector> zeta;  // Gamma_bar^{-1} e
  std::vector<double> V;         // zeta^T P zeta, empty without a certificate
  std::vector<double> envelope;  // decay bound, empty without a certificate
  bool truncated = false;
  std::string diagnostic;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  // |e^i(t_k)| per observer.
  Vector error_norms(std::size_t k, std::size_t observers) const;
};

// Derivative of (x, z^1..z^N) for the plant and the observer network.
Vector rhs_coupled(double t, std::span<const double> state, const Scenario& scenario);

// Derivative of the stacked error given the plant state x.
Vector error_dynamics_rhs(double t, std::span<const double> x, std::span<const double> e,
                          const Scenario& scenario);

Trajectory simulate(const Scenario& scenario);

// Co-integrates (x, e) with error_dynamics_rhs; z is reconstructed as x - e.
Trajectory simulate_error_dynamics(const Scenario& scenario);

// Integrates (x, zeta) in the transformed coordinates from t_start, reporting
// at the scenario grid points >= t_start. Error control is relative to the
// size of zeta (no absolute floor), so tiny transformed errors keep full
// relative precision.
Trajectory integrate_transformed(const Scenario& scenario, double t_start, std::span<const double> x_start,
                                 std::span<const double> zeta_start);

// zeta(t_k) = Gamma_bar^{-1}(t_k) e(t_k).
void transform_zeta(Trajectory& trajectory, const gains::GainSchedule& schedule,
                    const plant::CanonicalStructure& structure);

struct DecayEnvelope {
  double omega = 1.0;
  double alpha = 0.0;
  double reference = 0.0;  // |zeta(t*)|
  double mu_star = 1.0;
  unsigned m = 1;

  double bound(double mu_value) const;
};

DecayEnvelope make_envelope(const synthesis::LMICertificate& cert, const gains::GainSchedule& schedule,
                            double reference);

// Fills V and envelope. The reference is |zeta| at the first sample >= t*;
// envelope entries before t* are NaN.
void attach_certificate(Trajectory& trajectory, const synthesis::LMICertificate& cert,
                        const gains::GainSchedule& schedule);

struct EnvelopeReport {
  bool window_empty = false;
  bool passed = false;
  std::size_t samples_checked = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // |zeta| / bound, must stay <= slack
  double first_violation_time = 0.0;
  std::size_t v_increase_violations = 0;
  DecayEnvelope envelope;
};

EnvelopeReport check_envelope(const Trajectory& trajectory, const synthesis::LMICertificate& cert,
                              const gains::GainSchedule& schedule, double slack = 1.1);

struct InequalityReport {
  std::size_t samples = 0;
  double max_stacked_ratio = 0.0;  // |Gamma^{-1} B dPhi| / (k_f |zeta|)
  double max_block_ratio = 0.0;    // per-block quotient over n_i gamma_i |zeta_bar|
  std::size_t stacked_violations = 0;
  std::size_t block_violations = 0;
  std::string warning;  // sample box leaves the gammas' validity box
  bool passed() const { return stacked_violations == 0 && block_violations == 0; }
};

// Random (x, z^j, mu) with x and every z^j drawn from `box` and mu in
// [1, 100]; zeta = Gamma_bar^{-1}(x - z). Deterministic for a fixed seed.
InequalityReport check_lipschitz_bound(const plant::PlantModel& plant, const gains::GainSchedule& schedule,
                              const std::vector<plant::Interval>& box, std::size_t sample_count,
                              std::uint64_t seed);

// Componentwise bounding box of the plant states, widened by `pad` on each side.
std::vector<plant::Interval> trajectory_box(const Trajectory& trajectory, double pad = 0.0);

// max_k |a_k - b_k|_inf / max_k |b_k|_inf over stacked samples.
double relative_sup_deviation(const std::vector<Vector>& a, const std::vector<Vector>& b);

// max_i |e^i(last)| / max_i |e^i(first)|; 0 when the initial error is zero.
double terminal_error_ratio(const Trajectory& trajectory, std::size_t observers);

void write_csv(std::ostream& os, const Trajectory& trajectory, std::size_t state_dim, std::size_t observers);

}  // namespace ptonet::simulation
