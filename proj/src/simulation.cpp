#include "ptonet/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "ptonet/error.hpp"

namespace ptonet::simulation {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// dx = A x + B phi(x) written into out (length n).
void plant_field(const plant::PlantModel& plant, std::span<const double> x, std::span<double> out) {
  const auto& st = plant.structure;
  for (std::size_t i = 0; i < st.subsystems(); ++i) {
    const std::size_t off = st.offset(i), ni = st.block_size(i);
    for (std::size_t k = 0; k + 1 < ni; ++k) out[off + k] = x[off + k + 1];
    out[off + ni - 1] = plant.nonlinearity.expressions[i].evaluate(x);
  }
}

std::span<const double> slice(std::span<const double> v, std::size_t i, std::size_t n) { return v.subspan(i * n, n); }
std::span<double> slice(std::span<double> v, std::size_t i, std::size_t n) { return v.subspan(i * n, n); }

double consensus_gain(double mu_value, unsigned m) { return gains::int_power(mu_value, 1u + m); }

void check_time(double t, const Scenario& s) {
  if (!(t >= s.schedule.t0 && t < s.schedule.t0 + s.schedule.T)) {
    std::ostringstream os;
    os << "time " << t << " outside the integration window";
    throw DomainError(os.str());
  }
}

void coupled_into(double t, std::span<const double> state, std::span<double> out, const Scenario& s) {
  const std::size_t n = s.plant.structure.state_dim();
  const std::size_t N = s.plant.structure.subsystems();
  const double mu_value = gains::mu(t, s.schedule).value;
  const Vector gamma = gains::gamma_diag(mu_value, s.schedule, s.plant.structure);
  const double cg = consensus_gain(mu_value, s.schedule.m);
  const auto x = state.subspan(0, n);
  plant_field(s.plant, x, out.subspan(0, n));
  for (std::size_t i = 0; i < N; ++i) {
    const auto zi = state.subspan((i + 1) * n, n);
    auto dz = out.subspan((i + 1) * n, n);
    plant_field(s.plant, zi, dz);
    const std::size_t h = s.plant.structure.offset(i);
    const double innovation = x[h] - zi[h];
    const Vector& L = s.gains.L[i];
    for (std::size_t k = 0; k < n; ++k) dz[k] += gamma[k] * L[k] * innovation;
    const double ri = s.graph.r[i];
    for (std::size_t j = 0; j < N; ++j) {
      const double a = s.graph.adjacency(i, j);
      if (a == 0.0) continue;
      const auto zj = state.subspan((j + 1) * n, n);
      for (std::size_t k = 0; k < n; ++k) dz[k] -= cg * ri * a * (zi[k] - zj[k]);
    }
  }
}

void error_into(double t, std::span<const double> x, std::span<const double> e, std::span<double> out,
                const Scenario& s) {
  const std::size_t n = s.plant.structure.state_dim();
  const std::size_t N = s.plant.structure.subsystems();
  const auto& st = s.plant.structure;
  const double mu_value = gains::mu(t, s.schedule).value;
  const Vector gamma = gains::gamma_diag(mu_value, s.schedule, st);
  const double cg = consensus_gain(mu_value, s.schedule.m);
  for (std::size_t i = 0; i < N; ++i) {
    const auto ei = slice(e, i, n);
    auto de = slice(out, i, n);
    const Vector dphi = plant::eval_nonlinearity_difference(s.plant.nonlinearity, x, ei);
    for (std::size_t b = 0; b < N; ++b) {
      const std::size_t off = st.offset(b), nb = st.block_size(b);
      for (std::size_t k = 0; k + 1 < nb; ++k) de[off + k] = ei[off + k + 1];
      de[off + nb - 1] = dphi[b];
    }
    const double innovation = ei[st.offset(i)];
    const Vector& L = s.gains.L[i];
    for (std::size_t k = 0; k < n; ++k) de[k] -= gamma[k] * L[k] * innovation;
    const double ri = s.graph.r[i];
    for (std::size_t j = 0; j < N; ++j) {
      const double a = s.graph.adjacency(i, j);
      if (a == 0.0) continue;
      const auto ej = slice(e, j, n);
      for (std::size_t k = 0; k < n; ++k) de[k] -= cg * ri * a * (ei[k] - ej[k]);
    }
  }
}

void fill_mu(Trajectory& tr, const gains::GainSchedule& schedule) {
  tr.mu.clear();
  for (double t : tr.times) tr.mu.push_back(gains::mu(t, schedule).value);
}

}  // namespace

void Scenario::validate() const {
  schedule.validate();
  integrator.validate();
  const std::size_t n = plant.structure.state_dim();
  const std::size_t N = plant.structure.subsystems();
  if (n == 0) throw ValidationError("scenario: empty plant");
  if (graph.node_count != N) throw ValidationError("scenario: graph size differs from the sensor count");
  if (gains.L.size() != N) throw ValidationError("scenario: expected one gain vector per observer");
  for (const auto& L : gains.L) {
    if (L.size() != n) throw ValidationError("scenario: gain vectors must have length n");
    for (double v : L)
      if (!std::isfinite(v)) throw ValidationError("scenario: gains must be finite");
  }
  if (x0.size() != n) throw ValidationError("scenario: x0 must have length " + std::to_string(n));
  if (z0.size() != N) throw ValidationError("scenario: z0 needs one vector per observer");
  for (const auto& z : z0)
    if (z.size() != n) throw ValidationError("scenario: each z0 entry must have length " + std::to_string(n));
  for (double v : x0)
    if (!std::isfinite(v)) throw ValidationError("scenario: x0 must be finite");
  for (const auto& z : z0)
    for (double v : z)
      if (!std::isfinite(v)) throw ValidationError("scenario: z0 must be finite");
  if (grid_points < 2) throw ValidationError("scenario: grid needs at least two points");
  const double te = t_end();
  if (!(te > schedule.t0 && te < schedule.t0 + schedule.T)) {
    throw ValidationError("scenario: stop time must lie inside (t0, t0 + T)");
  }
}

std::vector<double> Scenario::output_grid() const {
  const double t0 = schedule.t0, te = t_end();
  std::vector<double> grid(grid_points);
  for (std::size_t k = 0; k < grid_points; ++k) {
    grid[k] = t0 + (te - t0) * static_cast<double>(k) / static_cast<double>(grid_points - 1);
  }
  grid.back() = te;
  for (double t : extra_times) {
    if (t >= t0 && t <= te) grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

Vector Trajectory::error_norms(std::size_t k, std::size_t observers) const {
  const std::size_t n = e[k].size() / observers;
  Vector out(observers);
  for (std::size_t i = 0; i < observers; ++i) {
    out[i] = numerics::norm2(std::span<const double>(e[k]).subspan(i * n, n));
  }
  return out;
}

Vector rhs_coupled(double t, std::span<const double> state, const Scenario& scenario) {
  const std::size_t n = scenario.plant.structure.state_dim();
  if (state.size() != n * (scenario.plant.structure.subsystems() + 1)) {
    throw ValidationError("rhs_coupled: state has the wrong length");
  }
  check_time(t, scenario);
  Vector out(state.size());
  coupled_into(t, state, out, scenario);
  return out;
}

Vector error_dynamics_rhs(double t, std::span<const double> x, std::span<const double> e,
                          const Scenario& scenario) {
  const std::size_t n = scenario.plant.structure.state_dim();
  if (x.size() != n || e.size() != n * scenario.plant.structure.subsystems()) {
    throw ValidationError("error_dynamics_rhs: wrong dimensions");
  }
  check_time(t, scenario);
  Vector out(e.size());
  error_into(t, x, e, out, scenario);
  return out;
}

Trajectory simulate(const Scenario& scenario) {
  scenario.validate();
  const std::size_t n = scenario.plant.structure.state_dim();
  const std::size_t N = scenario.plant.structure.subsystems();
  Vector y0(scenario.x0);
  for (const auto& z : scenario.z0) y0.insert(y0.end(), z.begin(), z.end());
  const auto grid = scenario.output_grid();
  const Rhs rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    coupled_into(t, y, dy, scenario);
  };
  auto res = integrate(rhs, scenario.schedule.t0, std::move(y0), scenario.t_end(), grid, scenario.integrator);

  Trajectory tr;
  tr.times = std::move(res.times);
  tr.truncated = res.truncated;
  tr.diagnostic = std::move(res.diagnostic);
  tr.accepted_steps = res.accepted;
  tr.rejected_steps = res.rejected;
  for (const auto& y : res.states) {
    Vector x(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    Vector z(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
    Vector e(n * N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < n; ++k) e[i * n + k] = x[k] - z[i * n + k];
    tr.x.push_back(std::move(x));
    tr.z.push_back(std::move(z));
    tr.e.push_back(std::move(e));
  }
  fill_mu(tr, scenario.schedule);
  transform_zeta(tr, scenario.schedule, scenario.plant.structure);
  return tr;
}

Trajectory simulate_error_dynamics(const Scenario& scenario) {
  scenario.validate();
  const std::size_t n = scenario.plant.structure.state_dim();
  const std::size_t N = scenario.plant.structure.subsystems();
  Vector y0(scenario.x0);
  for (const auto& z : scenario.z0)
    for (std::size_t k = 0; k < n; ++k) y0.push_back(scenario.x0[k] - z[k]);
  const auto grid = scenario.output_grid();
  const Rhs rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    plant_field(scenario.plant, y.subspan(0, n), dy.subspan(0, n));
    error_into(t, y.subspan(0, n), y.subspan(n), dy.subspan(n), scenario);
  };
  auto res = integrate(rhs, scenario.schedule.t0, std::move(y0), scenario.t_end(), grid, scenario.integrator);

  Trajectory tr;
  tr.times = std::move(res.times);
  tr.truncated = res.truncated;
  tr.diagnostic = std::move(res.diagnostic);
  tr.accepted_steps = res.accepted;
  tr.rejected_steps = res.rejected;
  for (const auto& y : res.states) {
    Vector x(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    Vector e(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
    Vector z(n * N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < n; ++k) z[i * n + k] = x[k] - e[i * n + k];
    tr.x.push_back(std::move(x));
    tr.z.push_back(std::move(z));
    tr.e.push_back(std::move(e));
  }
  fill_mu(tr, scenario.schedule);
  transform_zeta(tr, scenario.schedule, scenario.plant.structure);
  return tr;
}

Trajectory integrate_transformed(const Scenario& scenario, double t_start, std::span<const double> x_start,
                                 std::span<const double> zeta_start) {
  scenario.validate();
  const auto& st = scenario.plant.structure;
  const std::size_t n = st.state_dim();
  const std::size_t N = st.subsystems();
  if (x_start.size() != n || zeta_start.size() != n * N) {
    throw ValidationError("integrate_transformed: wrong dimensions");
  }
  if (!(t_start >= scenario.schedule.t0 && t_start < scenario.t_end())) {
    throw ValidationError("integrate_transformed: start time outside the window");
  }
  std::vector<double> grid;
  for (double t : scenario.output_grid())
    if (t >= t_start) grid.push_back(t);
  if (grid.empty() || grid.front() != t_start) grid.insert(grid.begin(), t_start);

  const auto dil = gains::build_dilation(st, 1).per_copy;
  const double T = scenario.schedule.T;
  const unsigned m = scenario.schedule.m;
  const Rhs rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    const double mu_value = gains::mu(t, scenario.schedule).value;
    const Vector g = gains::gamma_diag(mu_value, scenario.schedule, st);
    const Vector ginv = gains::gamma_inverse_diag(mu_value, scenario.schedule, st);
    const double cg = consensus_gain(mu_value, m);
    const double drift = (1.0 + m) * mu_value / T;
    const auto x = y.subspan(0, n);
    plant_field(scenario.plant, x, dy.subspan(0, n));
    Vector e(n);
    for (std::size_t i = 0; i < N; ++i) {
      const auto zi = y.subspan(n + i * n, n);
      auto dz = dy.subspan(n + i * n, n);
      for (std::size_t k = 0; k < n; ++k) e[k] = g[k] * zi[k];
      const Vector dphi = plant::eval_nonlinearity_difference(scenario.plant.nonlinearity, x, e);
      const double innovation = zi[st.offset(i)];
      const Vector& L = scenario.gains.L[i];
      for (std::size_t b = 0; b < N; ++b) {
        const std::size_t off = st.offset(b), nb = st.block_size(b);
        for (std::size_t k = 0; k + 1 < nb; ++k) dz[off + k] = cg * zi[off + k + 1];
        dz[off + nb - 1] = ginv[off + nb - 1] * dphi[b];
      }
      for (std::size_t k = 0; k < n; ++k) dz[k] -= cg * L[k] * innovation + drift * dil[k] * zi[k];
      const double ri = scenario.graph.r[i];
      for (std::size_t j = 0; j < N; ++j) {
        const double a = scenario.graph.adjacency(i, j);
        if (a == 0.0) continue;
        const auto zj = y.subspan(n + j * n, n);
        for (std::size_t k = 0; k < n; ++k) dz[k] -= cg * ri * a * (zi[k] - zj[k]);
      }
    }
  };
  // x and zeta get separate error scales.
  std::vector<std::size_t> groups(n * (N + 1), 1);
  std::fill(groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(n), 0);

  Vector y0(x_start.begin(), x_start.end());
  y0.insert(y0.end(), zeta_start.begin(), zeta_start.end());
  // zeta shrinks by hundreds of orders of magnitude; only relative control
  // resolves it.
  IntegratorOptions options = scenario.integrator;
  options.abs_tol = std::numeric_limits<double>::min();
  auto res = integrate(rhs, t_start, std::move(y0), scenario.t_end(), grid, options, groups);

  Trajectory tr;
  tr.times = std::move(res.times);
  tr.truncated = res.truncated;
  tr.diagnostic = std::move(res.diagnostic);
  tr.accepted_steps = res.accepted;
  tr.rejected_steps = res.rejected;
  fill_mu(tr, scenario.schedule);
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    const auto& y = res.states[s];
    Vector x(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    Vector zeta(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
    const Vector g = gains::gamma_diag(tr.mu[s], scenario.schedule, st);
    Vector e(n * N), z(n * N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        e[i * n + k] = g[k] * zeta[i * n + k];
        z[i * n + k] = x[k] - e[i * n + k];
      }
    tr.x.push_back(std::move(x));
    tr.z.push_back(std::move(z));
    tr.e.push_back(std::move(e));
    tr.zeta.push_back(std::move(zeta));
  }
  return tr;
}

void transform_zeta(Trajectory& trajectory, const gains::GainSchedule& schedule,
                    const plant::CanonicalStructure& structure) {
  const std::size_t n = structure.state_dim();
  trajectory.zeta.clear();
  for (std::size_t s = 0; s < trajectory.times.size(); ++s) {
    const double mu_value = gains::mu(trajectory.times[s], schedule).value;
    const Vector ginv = gains::gamma_inverse_diag(mu_value, schedule, structure);
    Vector zeta(trajectory.e[s].size());
    for (std::size_t k = 0; k < zeta.size(); ++k) zeta[k] = ginv[k % n] * trajectory.e[s][k];
    trajectory.zeta.push_back(std::move(zeta));
  }
}

double DecayEnvelope::bound(double mu_value) const {
  return omega * reference *
         std::exp(-alpha * (gains::int_power(mu_value, m) - gains::int_power(mu_star, m)));
}

DecayEnvelope make_envelope(const synthesis::LMICertificate& cert, const gains::GainSchedule& schedule,
                            double reference) {
  const DenseMatrix P = cert.p_full();
  const auto w = numerics::sym_eigenvalues(P);
  if (!(w.front() > 0.0)) throw NumericalError("envelope: P is not positive definite");
  DecayEnvelope env;
  env.omega = std::sqrt(w.back() / w.front());
  env.alpha = cert.eps1 * schedule.T / (2.0 * schedule.m * w.back());
  env.reference = reference;
  env.mu_star = cert.mu_star;
  env.m = schedule.m;
  return env;
}

namespace {

std::size_t first_at_or_after(const std::vector<double>& times, double t) {
  return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
}

double quadratic_form(const synthesis::LMICertificate& cert, std::span<const double> zeta) {
  const std::size_t n = cert.p_blocks.front().rows();
  double v = 0.0;
  for (std::size_t i = 0; i < cert.p_blocks.size(); ++i) {
    const auto& P = cert.p_blocks[i];
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) v += zeta[i * n + a] * P(a, b) * zeta[i * n + b];
  }
  return v;
}

}  // namespace

void attach_certificate(Trajectory& trajectory, const synthesis::LMICertificate& cert,
                        const gains::GainSchedule& schedule) {
  trajectory.V.clear();
  trajectory.envelope.assign(trajectory.times.size(), kNaN);
  for (const auto& z : trajectory.zeta) trajectory.V.push_back(quadratic_form(cert, z));
  const std::size_t k0 = first_at_or_after(trajectory.times, cert.t_star);
  if (k0 >= trajectory.times.size()) return;
  const auto env = make_envelope(cert, schedule, numerics::norm2(trajectory.zeta[k0]));
  for (std::size_t k = k0; k < trajectory.times.size(); ++k) trajectory.envelope[k] = env.bound(trajectory.mu[k]);
}

EnvelopeReport check_envelope(const Trajectory& trajectory, const synthesis::LMICertificate& cert,
                              const gains::GainSchedule& schedule, double slack) {
  EnvelopeReport rep;
  const std::size_t k0 = first_at_or_after(trajectory.times, cert.t_star);
  if (k0 >= trajectory.times.size()) {
    rep.window_empty = true;
    return rep;
  }
  rep.envelope = make_envelope(cert, schedule, numerics::norm2(trajectory.zeta[k0]));
  double prev_v = quadratic_form(cert, trajectory.zeta[k0]);
  for (std::size_t k = k0; k < trajectory.times.size(); ++k) {
    const double norm = numerics::norm2(trajectory.zeta[k]);
    const double b = rep.envelope.bound(trajectory.mu[k]);
    ++rep.samples_checked;
    const double ratio = b > 0.0 ? norm / b : (norm > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (norm > slack * b) {
      if (rep.violations == 0) rep.first_violation_time = trajectory.times[k];
      ++rep.violations;
    }
    const double v = quadratic_form(cert, trajectory.zeta[k]);
    if (k > k0 && v > prev_v * (1.0 + 1e-6) + 1e-300) ++rep.v_increase_violations;
    prev_v = v;
  }
  rep.passed = rep.violations == 0;
  return rep;
}

InequalityReport check_lipschitz_bound(const plant::PlantModel& plant, const gains::GainSchedule& schedule,
                              const std::vector<plant::Interval>& box, std::size_t sample_count,
                              std::uint64_t seed) {
  const auto& st = plant.structure;
  const std::size_t n = st.state_dim();
  const std::size_t N = st.subsystems();
  if (box.size() != n) throw ValidationError("check_lipschitz_bound: box needs one interval per state");
  for (const auto& [lo, hi] : box) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
      throw ValidationError("check_lipschitz_bound: box bounds must be finite with lo <= hi");
    }
  }
  InequalityReport rep;
  rep.samples = sample_count;
  const auto& valid = plant.nonlinearity.validity_box;
  if (!valid.empty()) {
    for (std::size_t k = 0; k < n && k < valid.size(); ++k) {
      if (box[k].first < valid[k].first || box[k].second > valid[k].second) {
        rep.warning = "sample box leaves the validity box of the supplied Lipschitz constants at x_" +
                      std::to_string(k + 1);
        break;
      }
    }
  }
  const double kf = plant::compute_kf(st, plant.nonlinearity.gammas);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(n), z(n), e(n);
  constexpr double kRelSlack = 1e-9;
  for (std::size_t s = 0; s < sample_count; ++s) {
    for (std::size_t k = 0; k < n; ++k) x[k] = box[k].first + unit(rng) * (box[k].second - box[k].first);
    const double mu_value = 1.0 + 99.0 * unit(rng);
    const Vector ginv = gains::gamma_inverse_diag(mu_value, schedule, st);
    double lhs2 = 0.0, zeta2 = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        z[k] = box[k].first + unit(rng) * (box[k].second - box[k].first);
        e[k] = x[k] - z[k];
      }
      const Vector dphi = plant::eval_nonlinearity_difference(plant.nonlinearity, x, e);
      double prefix2 = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const std::size_t off = st.offset(i), ni = st.block_size(i);
        for (std::size_t k = off; k < off + ni; ++k) prefix2 += (ginv[k] * e[k]) * (ginv[k] * e[k]);
        const double scaled = std::abs(ginv[off + ni - 1] * dphi[i]);
        lhs2 += scaled * scaled;
        const double rhs = static_cast<double>(ni) * plant.nonlinearity.gammas[i] * std::sqrt(prefix2);
        const double ratio = rhs > 0.0 ? scaled / rhs : (scaled > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        rep.max_block_ratio = std::max(rep.max_block_ratio, ratio);
        if (scaled > rhs * (1.0 + kRelSlack)) ++rep.block_violations;
      }
      zeta2 += prefix2;
    }
    const double lhs = std::sqrt(lhs2), rhs = kf * std::sqrt(zeta2);
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.max_stacked_ratio = std::max(rep.max_stacked_ratio, ratio);
    if (lhs > rhs * (1.0 + kRelSlack)) ++rep.stacked_violations;
  }
  return rep;
}

std::vector<plant::Interval> trajectory_box(const Trajectory& trajectory, double pad) {
  if (trajectory.x.empty()) throw ValidationError("trajectory_box: empty trajectory");
  const std::size_t n = trajectory.x.front().size();
  std::vector<plant::Interval> box(n, {std::numeric_limits<double>::infinity(),
                                       -std::numeric_limits<double>::infinity()});
  for (const auto& x : trajectory.x)
    for (std::size_t k = 0; k < n; ++k) {
      box[k].first = std::min(box[k].first, x[k]);
      box[k].second = std::max(box[k].second, x[k]);
    }
  for (auto& b : box) {
    b.first -= pad;
    b.second += pad;
  }
  return box;
}

double relative_sup_deviation(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() != b.size()) throw ValidationError("relative_sup_deviation: sample counts differ");
  double dev = 0.0, scale = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s].size() != b[s].size()) throw ValidationError("relative_sup_deviation: sample sizes differ");
    for (std::size_t k = 0; k < a[s].size(); ++k) {
      dev = std::max(dev, std::abs(a[s][k] - b[s][k]));
      scale = std::max(scale, std::abs(b[s][k]));
    }
  }
  return scale > 0.0 ? dev / scale : dev;
}

double terminal_error_ratio(const Trajectory& trajectory, std::size_t observers) {
  if (trajectory.e.empty()) throw ValidationError("terminal_error_ratio: empty trajectory");
  const Vector first = trajectory.error_norms(0, observers);
  const Vector last = trajectory.error_norms(trajectory.e.size() - 1, observers);
  const double e0 = *std::max_element(first.begin(), first.end());
  const double e1 = *std::max_element(last.begin(), last.end());
  return e0 > 0.0 ? e1 / e0 : 0.0;
}

void write_csv(std::ostream& os, const Trajectory& tr, std::size_t n, std::size_t N) {
  os << "t,mu";
  for (std::size_t k = 1; k <= n; ++k) os << ",x_" << k;
  for (std::size_t i = 1; i <= N; ++i)
    for (std::size_t k = 1; k <= n; ++k) os << ",z" << i << "_" << k;
  for (std::size_t i = 1; i <= N; ++i) os << ",err_norm_" << i;
  os << ",zeta_norm,V,envelope\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    put(tr.times[s]);
    os << ',';
    put(tr.mu[s]);
    for (double v : tr.x[s]) os << ',', put(v);
    for (double v : tr.z[s]) os << ',', put(v);
    for (double v : tr.error_norms(s, N)) os << ',', put(v);
    os << ',';
    put(numerics::norm2(tr.zeta[s]));
    os << ',';
    put(s < tr.V.size() ? tr.V[s] : kNaN);
    os << ',';
    put(s < tr.envelope.size() ? tr.envelope[s] : kNaN);
    os << '\n';
  }
}

}  // namespace ptonet::simulation
