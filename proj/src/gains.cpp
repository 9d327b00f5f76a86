#include "ptonet/gains.hpp"

#include <cmath>
#include <sstream>

#include "ptonet/error.hpp"

namespace ptonet::gains {

void GainSchedule::validate() const {
  if (!std::isfinite(t0)) throw ValidationError("schedule: t0 must be finite");
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("schedule: T must be positive");
  if (m < 1) throw ValidationError("schedule: m must be an integer >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("schedule: delta must lie in (0, 1)");
  if (!(mu_cap > 1.0)) throw ValidationError("schedule: mu_cap must exceed 1");
}

MuValue mu(double t, const GainSchedule& schedule) {
  if (!(t >= schedule.t0 && t < schedule.t0 + schedule.T)) {
    std::ostringstream os;
    os << "mu: t = " << t << " outside [" << schedule.t0 << ", " << schedule.t0 + schedule.T << ")";
    throw DomainError(os.str());
  }
  const double value = schedule.T / (schedule.T + schedule.t0 - t);
  if (!(value <= schedule.mu_cap)) return {schedule.mu_cap, true};
  return {value, false};
}

double int_power(double x, unsigned k) {
  double result = 1.0;
  while (k > 0) {
    if (k & 1u) result *= x;
    x *= x;
    k >>= 1u;
  }
  return result;
}

Vector gamma_diag(double mu_value, const GainSchedule& schedule,
                  const plant::CanonicalStructure& structure) {
  if (!(mu_value >= 1.0)) throw DomainError("gamma_diag: mu must be >= 1");
  Vector d;
  d.reserve(structure.state_dim());
  for (std::size_t i = 0; i < structure.subsystems(); ++i) {
    for (std::size_t k = 1; k <= structure.block_size(i); ++k) {
      const unsigned exponent = static_cast<unsigned>(k) * (1u + schedule.m);
      const double v = int_power(mu_value, exponent);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "gamma_diag: mu^" << exponent << " overflows at mu = " << mu_value;
        throw NumericalError(os.str());
      }
      d.push_back(v);
    }
  }
  return d;
}

Vector gamma_inverse_diag(double mu_value, const GainSchedule& schedule,
                          const plant::CanonicalStructure& structure) {
  if (!(mu_value >= 1.0)) throw DomainError("gamma_inverse_diag: mu must be >= 1");
  const double inv = 1.0 / mu_value;
  Vector d;
  d.reserve(structure.state_dim());
  for (std::size_t i = 0; i < structure.subsystems(); ++i) {
    for (std::size_t k = 1; k <= structure.block_size(i); ++k) {
      d.push_back(int_power(inv, static_cast<unsigned>(k) * (1u + schedule.m)));
    }
  }
  return d;
}

DilationSpec build_dilation(const plant::CanonicalStructure& structure, std::size_t copies) {
  DilationSpec spec;
  for (std::size_t i = 0; i < structure.subsystems(); ++i) {
    for (std::size_t k = 1; k <= structure.block_size(i); ++k) {
      spec.per_copy.push_back(static_cast<double>(k));
    }
  }
  spec.full.reserve(spec.per_copy.size() * copies);
  for (std::size_t c = 0; c < copies; ++c) {
    spec.full.insert(spec.full.end(), spec.per_copy.begin(), spec.per_copy.end());
  }
  return spec;
}

}  // namespace ptonet::gains
