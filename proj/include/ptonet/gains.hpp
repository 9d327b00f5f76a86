#pragma once

#include <cstddef>

#include "ptonet/numerics.hpp"
#include "ptonet/plant.hpp"

namespace ptonet::gains {

using numerics::Vector;

struct GainSchedule {
  double t0 = 0.0;
  double T = 1.0;
  unsigned m = 1;
  double mu_cap = 1e8;
  double delta = 0.005;  // stop margin, fraction of T

  // Throws ValidationError unless T > 0, m >= 1, 0 < delta < 1, mu_cap > 1.
  void validate() const;
  double stop_time() const { return t0 + T * (1.0 - delta); }
};

struct MuValue {
  double value = 1.0;
  bool clamped = false;
};

// mu(t) = T / (T + t0 - t) on [t0, t0 + T), clamped at mu_cap. Throws
// DomainError outside the interval.
MuValue mu(double t, const GainSchedule& schedule);

// x^k for integer k by repeated squaring.
double int_power(double x, unsigned k);

// Diagonal of Gamma(mu): block i contributes mu^{k(1+m)}, k = 1..n_i.
// Throws NumericalError naming the exponent if a power overflows.
Vector gamma_diag(double mu_value, const GainSchedule& schedule,
                  const plant::CanonicalStructure& structure);

// Diagonal of Gamma^{-1}(mu), each entry raised directly as (1/mu)^{k(1+m)}.
Vector gamma_inverse_diag(double mu_value, const GainSchedule& schedule,
                          const plant::CanonicalStructure& structure);

// D_i = diag(1..n_i); the full matrix is copies of diag(D_1..D_N).
struct DilationSpec {
  Vector per_copy;  // length n
  Vector full;      // length n * copies
};

DilationSpec build_dilation(const plant::CanonicalStructure& structure, std::size_t copies);

}  // namespace ptonet::gains
