#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ptonet/numerics.hpp"

namespace ptonet::simulation {

using numerics::Vector;

struct IntegratorOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.0;      // 0: no limit beyond the interval
  double initial_step = 0.0;  // 0: automatic
  double step_floor = 0.0;    // 0: 1e-12 * span
  std::size_t max_steps = 20'000'000;

  // Throws ValidationError unless every value is positive (or zero where
  // zero means automatic) and rel_tol >= 1e-13.
  void validate() const;
};

using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

struct IntegrationResult {
  std::vector<double> times;   // the requested output times actually reached
  std::vector<Vector> states;  // one per entry of times
  Vector final_state;
  double final_time = 0.0;
  bool truncated = false;
  std::string diagnostic;  // set when truncated
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

// Dormand-Prince 5(4) with FSAL and fourth-order dense output at
// `output_times` (ascending, inside [t0, t_end]). A step that cannot finish
// the interval is clamped to at most half the remaining distance. When
// `groups` is non-empty it assigns each component to a group and the error
// weight of a component is abs_tol + rel_tol * (largest magnitude in its
// group); otherwise weights are per component. A step below step_floor or a
// non-finite derivative that cannot be cured by shrinking stops the run with
// `truncated` set.
IntegrationResult integrate(const Rhs& rhs, double t0, Vector y0, double t_end,
                            std::span<const double> output_times, const IntegratorOptions& options,
                            std::span<const std::size_t> groups = {});

}  // namespace ptonet::simulation
