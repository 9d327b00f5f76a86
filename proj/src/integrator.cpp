#include "ptonet/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ptonet/error.hpp"

namespace ptonet::simulation {

void IntegratorOptions::validate() const {
  if (!(rel_tol > 0.0) || !std::isfinite(rel_tol)) throw ValidationError("integrator: rel_tol must be positive");
  if (rel_tol < 1e-13) throw ValidationError("integrator: rel_tol must be >= 1e-13");
  if (!(abs_tol > 0.0) || !std::isfinite(abs_tol)) throw ValidationError("integrator: abs_tol must be positive");
  if (!(max_step >= 0.0) || !std::isfinite(max_step)) throw ValidationError("integrator: max_step must be >= 0");
  if (!(initial_step >= 0.0) || !std::isfinite(initial_step)) {
    throw ValidationError("integrator: initial_step must be >= 0");
  }
  if (!(step_floor >= 0.0) || !std::isfinite(step_floor)) throw ValidationError("integrator: step_floor must be >= 0");
  if (max_steps == 0) throw ValidationError("integrator: max_steps must be positive");
}

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Shampine's dense output coefficients.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::size_t first_nonfinite(std::span<const double> v) {
  for (std::size_t k = 0; k < v.size(); ++k)
    if (!std::isfinite(v[k])) return k;
  return v.size();
}

class Weights {
 public:
  Weights(const IntegratorOptions& o, std::span<const std::size_t> groups, std::size_t dim)
      : rel_(o.rel_tol), abs_(o.abs_tol), groups_(groups) {
    if (!groups_.empty()) {
      if (groups_.size() != dim) throw ValidationError("integrator: group map has the wrong length");
      group_count_ = *std::max_element(groups_.begin(), groups_.end()) + 1;
      scale_.resize(group_count_);
    }
  }

  double error_norm(std::span<const double> y0, std::span<const double> y1, std::span<const double> err) {
    double worst = 0.0;
    if (groups_.empty()) {
      for (std::size_t k = 0; k < err.size(); ++k) {
        const double sc = abs_ + rel_ * std::max(std::abs(y0[k]), std::abs(y1[k]));
        worst = std::max(worst, std::abs(err[k]) / sc);
      }
      return worst;
    }
    std::fill(scale_.begin(), scale_.end(), 0.0);
    for (std::size_t k = 0; k < err.size(); ++k) {
      scale_[groups_[k]] = std::max({scale_[groups_[k]], std::abs(y0[k]), std::abs(y1[k])});
    }
    for (std::size_t k = 0; k < err.size(); ++k) {
      worst = std::max(worst, std::abs(err[k]) / (abs_ + rel_ * scale_[groups_[k]]));
    }
    return worst;
  }

 private:
  double rel_, abs_;
  std::span<const std::size_t> groups_;
  std::size_t group_count_ = 0;
  Vector scale_;
};

}  // namespace

IntegrationResult integrate(const Rhs& rhs, double t0, Vector y0, double t_end,
                            std::span<const double> output_times, const IntegratorOptions& options,
                            std::span<const std::size_t> groups) {
  options.validate();
  if (!(t_end > t0) || !std::isfinite(t0) || !std::isfinite(t_end)) {
    throw ValidationError("integrator: need finite t0 < t_end");
  }
  for (std::size_t k = 0; k < output_times.size(); ++k) {
    if (output_times[k] < t0 || output_times[k] > t_end || (k > 0 && output_times[k] <= output_times[k - 1])) {
      throw ValidationError("integrator: output times must increase strictly inside [t0, t_end]");
    }
  }
  if (!finite(y0)) throw ValidationError("integrator: initial state is not finite");

  const std::size_t dim = y0.size();
  const double span = t_end - t0;
  const double floor = options.step_floor > 0.0 ? options.step_floor : 1e-12 * span;
  const double hmax = options.max_step > 0.0 ? options.max_step : span;
  Weights weights(options, groups, dim);

  IntegrationResult out;
  std::size_t next_out = 0;

  Vector y = std::move(y0), ynew(dim), tmp(dim), err(dim);
  Vector k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  double t = t0;
  rhs(t, y, k1);
  if (!finite(k1)) {
    std::ostringstream os;
    os << "non-finite derivative at t = " << t << ", component " << first_nonfinite(k1);
    throw NumericalError(os.str());
  }

  // Fourth-order continuous extension of the accepted step (y at t_lo to
  // ynew at t_hi), built from the stage derivatives k1..k7.
  auto emit_until = [&](double t_lo, double t_hi) {
    const double h = t_hi - t_lo;
    bool built = false;
    Vector r2(dim), r3(dim), r4(dim), r5(dim);
    while (next_out < output_times.size() && output_times[next_out] <= t_hi) {
      const double to = output_times[next_out];
      Vector yo(dim);
      if (to == t_hi) {
        yo = ynew;
      } else if (to == t_lo) {
        yo = y;
      } else {
        if (!built) {
          for (std::size_t k = 0; k < dim; ++k) {
            r2[k] = ynew[k] - y[k];
            r3[k] = h * k1[k] - r2[k];
            r4[k] = r2[k] - h * k7[k] - r3[k];
            r5[k] = h * (d1 * k1[k] + d3 * k3[k] + d4 * k4[k] + d5 * k5[k] + d6 * k6[k] + d7 * k7[k]);
          }
          built = true;
        }
        const double s = (to - t_lo) / h, s1 = 1.0 - s;
        for (std::size_t k = 0; k < dim; ++k) yo[k] = y[k] + s * (r2[k] + s1 * (r3[k] + s * (r4[k] + s1 * r5[k])));
      }
      out.times.push_back(to);
      out.states.push_back(std::move(yo));
      ++next_out;
    }
  };
  while (next_out < output_times.size() && output_times[next_out] == t0) {
    out.times.push_back(t0);
    out.states.push_back(y);
    ++next_out;
  }

  // Initial step from the usual derivative-ratio heuristic.
  double h = options.initial_step;
  if (h <= 0.0) {
    const double d0 = numerics::norm_inf(y), d1 = numerics::norm_inf(k1);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    h = std::min(h, 1e-3 * span);
  }
  h = std::min(h, hmax);

  std::string last_nonfinite;
  std::size_t steps = 0;
  while (t < t_end) {
    if (++steps > options.max_steps) {
      out.truncated = true;
      out.diagnostic = "step budget exhausted at t = " + std::to_string(t);
      break;
    }
    const double remaining = t_end - t;
    bool last = false;
    if (h >= remaining) {
      h = remaining;
      last = true;
    } else {
      h = std::min(h, 0.5 * remaining);
    }
    if (h < floor && !last) {
      std::ostringstream os;
      os << "step size " << h << " fell below the floor " << floor << " at t = " << t;
      if (!last_nonfinite.empty()) os << " (" << last_nonfinite << ")";
      out.truncated = true;
      out.diagnostic = os.str();
      break;
    }

    for (std::size_t k = 0; k < dim; ++k) tmp[k] = y[k] + h * a21 * k1[k];
    rhs(t + c2 * h, tmp, k2);
    for (std::size_t k = 0; k < dim; ++k) tmp[k] = y[k] + h * (a31 * k1[k] + a32 * k2[k]);
    rhs(t + c3 * h, tmp, k3);
    for (std::size_t k = 0; k < dim; ++k) tmp[k] = y[k] + h * (a41 * k1[k] + a42 * k2[k] + a43 * k3[k]);
    rhs(t + c4 * h, tmp, k4);
    for (std::size_t k = 0; k < dim; ++k)
      tmp[k] = y[k] + h * (a51 * k1[k] + a52 * k2[k] + a53 * k3[k] + a54 * k4[k]);
    rhs(t + c5 * h, tmp, k5);
    for (std::size_t k = 0; k < dim; ++k)
      tmp[k] = y[k] + h * (a61 * k1[k] + a62 * k2[k] + a63 * k3[k] + a64 * k4[k] + a65 * k5[k]);
    const double t_new = last ? t_end : t + h;
    rhs(t_new, tmp, k6);
    for (std::size_t k = 0; k < dim; ++k)
      ynew[k] = y[k] + h * (b1 * k1[k] + b3 * k3[k] + b4 * k4[k] + b5 * k5[k] + b6 * k6[k]);
    rhs(t_new, ynew, k7);
    for (std::size_t k = 0; k < dim; ++k)
      err[k] = h * (e1 * k1[k] + e3 * k3[k] + e4 * k4[k] + e5 * k5[k] + e6 * k6[k] + e7 * k7[k]);

    double en = std::numeric_limits<double>::infinity();
    if (finite(ynew) && finite(k7) && finite(err)) {
      en = weights.error_norm(y, ynew, err);
    } else {
      std::ostringstream os;
      os << "non-finite derivative near t = " << t_new << ", component " << first_nonfinite(k7);
      last_nonfinite = os.str();
    }

    if (en <= 1.0) {
      emit_until(t, t_new);
      t = t_new;
      std::swap(y, ynew);
      std::swap(k1, k7);
      ++out.accepted;
      const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h = std::min(h * factor, hmax);
    } else {
      ++out.rejected;
      const double factor = std::isfinite(en) ? std::clamp(0.9 * std::pow(en, -0.25), 0.1, 0.9) : 0.1;
      h *= factor;
    }
  }
  out.final_state = y;
  out.final_time = t;
  return out;
}

}  // namespace ptonet::simulation
