#include "ptonet/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ptonet/error.hpp"

namespace ptonet::synthesis {

namespace {

constexpr const char* kCheckPd = "P > 0";
constexpr const char* kCheckInjection = "injection";
constexpr const char* kCheckDilation = "dilation";
constexpr const char* kCheckUpper = "upper bound";
constexpr const char* kCheckPrescribed = "prescribed time";

double t_star_for(double mu_star, double t0, double T) { return t0 + T * (1.0 - 1.0 / mu_star); }

}  // namespace

double LMIProblem::eps2_ratio() const {
  return 2.0 * kf * T / (mu_star * (1.0 + static_cast<double>(m)));
}

LMIProblem assemble_problem(const plant::PlantModel& plant, const graph::ValidatedDigraph& graph,
                            const gains::GainSchedule& schedule, double kf, double mu_star) {
  schedule.validate();
  const std::size_t n = plant.structure.state_dim();
  const std::size_t N = plant.structure.subsystems();
  if (graph.node_count != N) {
    throw ValidationError("graph has " + std::to_string(graph.node_count) + " nodes but the plant has " +
                          std::to_string(N) + " sensors");
  }
  if (!(mu_star >= 1.0) || !std::isfinite(mu_star)) throw ValidationError("mu_star must be >= 1");
  if (!(kf >= 0.0) || !std::isfinite(kf)) throw ValidationError("k_f must be finite and >= 0");

  LMIProblem p;
  p.n = n;
  p.N = N;
  p.a_bar = numerics::kron(DenseMatrix::identity(N), plant.matrices.A);
  p.h_rows = plant.matrices.h_rows;
  p.h_under = DenseMatrix(N, n * N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < n; ++k) p.h_under(i, i * n + k) = p.h_rows[i][k];
  }
  p.rl_kron = numerics::kron(graph.R * graph.laplacian, DenseMatrix::identity(n));
  p.d_bar = gains::build_dilation(plant.structure, N).full;
  p.kf = kf;
  p.T = schedule.T;
  p.m = schedule.m;
  p.mu_star = mu_star;
  p.t0 = schedule.t0;
  return p;
}

DenseMatrix LMICertificate::p_full() const { return numerics::block_diagonal(p_blocks); }

namespace {

void check_shape(const LMIProblem& problem, const LMICertificate& cert) {
  if (cert.p_blocks.size() != problem.N || cert.q_rows.size() != problem.N) {
    throw ValidationError("certificate must carry " + std::to_string(problem.N) + " P blocks and Q rows");
  }
  for (std::size_t i = 0; i < problem.N; ++i) {
    const auto& P = cert.p_blocks[i];
    if (P.rows() != problem.n || P.cols() != problem.n) {
      throw ValidationError("certificate P block " + std::to_string(i + 1) + " has the wrong shape");
    }
    if (!P.all_finite() || numerics::asymmetry(P) > 1e-12) {
      throw ValidationError("certificate P block " + std::to_string(i + 1) + " is not finite and symmetric");
    }
    if (cert.q_rows[i].size() != problem.n) {
      throw ValidationError("certificate Q row " + std::to_string(i + 1) + " has the wrong length");
    }
    for (double v : cert.q_rows[i]) {
      if (!std::isfinite(v)) throw ValidationError("certificate Q entries must be finite");
    }
  }
  for (double v : {cert.eps1, cert.eps2, cert.eps3, cert.mu_star, cert.t_star}) {
    if (!std::isfinite(v)) throw ValidationError("certificate scalars must be finite");
  }
  if (!(cert.mu_star >= 1.0)) throw ValidationError("certificate mu_star must be >= 1");
}

}  // namespace

DenseMatrix injection_lmi_matrix(const LMIProblem& problem, const LMICertificate& cert) {
  const std::size_t n = problem.n;
  const std::size_t N = problem.N;
  const DenseMatrix drift = problem.a_bar - problem.rl_kron;
  DenseMatrix M(n * N, n * N);
  // P is block diagonal: row block i of P (A_bar - RL (x) I) is P_i times row block i.
  for (std::size_t i = 0; i < N; ++i) {
    const DenseMatrix rows = cert.p_blocks[i] * drift.block(i * n, 0, n, n * N);
    M.set_block(i * n, 0, rows);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        M(i * n + a, i * n + b) -= cert.q_rows[i][a] * problem.h_rows[i][b];
  }
  return M.sym();
}

VerificationReport verify_certificate(const LMIProblem& problem, const LMICertificate& cert,
                                      double tol) {
  if (!(tol > 0.0)) throw ValidationError("verify_certificate: tol must be positive");
  check_shape(problem, cert);
  VerificationReport report;
  report.tolerance = tol;

  double pd = std::numeric_limits<double>::infinity();
  double upper = -std::numeric_limits<double>::infinity();
  double dil = std::numeric_limits<double>::infinity();
  const std::size_t n = problem.n;
  for (std::size_t i = 0; i < problem.N; ++i) {
    const auto w = numerics::sym_eigenvalues(cert.p_blocks[i]);
    pd = std::min(pd, w.front());
    upper = std::max(upper, w.back());
    // sym(P D_bar) is block diagonal with blocks P_i D + D P_i.
    DenseMatrix s(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        s(a, b) = cert.p_blocks[i](a, b) * (problem.d_bar[i * n + b] + problem.d_bar[i * n + a]);
    dil = std::min(dil, numerics::lambda_min(s));
  }
  const double inj = numerics::lambda_max(injection_lmi_matrix(problem, cert));
  const double ratio = 2.0 * problem.kf * problem.T / (cert.mu_star * (1.0 + static_cast<double>(problem.m)));

  report.checks.push_back({kCheckPd, pd, pd > tol});
  const double m_inj = -(inj + cert.eps1);
  report.checks.push_back({kCheckInjection, m_inj, m_inj >= -tol});
  const double m_dil = dil - cert.eps2;
  report.checks.push_back({kCheckDilation, m_dil, m_dil >= -tol});
  const double m_up = cert.eps3 - upper;
  report.checks.push_back({kCheckUpper, m_up, m_up >= -tol});
  const double m_pt = cert.eps2 - ratio * cert.eps3;
  report.checks.push_back({kCheckPrescribed, m_pt, m_pt >= -tol});

  report.scalars_positive = cert.eps1 > 0.0 && cert.eps2 > 0.0 && cert.eps3 > 0.0;
  report.passed = report.scalars_positive &&
                  std::all_of(report.checks.begin(), report.checks.end(),
                              [](const CheckResult& c) { return c.passed; });
  return report;
}

namespace {

// Douglas-Rachford splitting on the pair
//   G = {(p, s) : s = A p + c}            (affine image of the unknowns)
//   K = {p : |Q_i| <= q_max} x cones      (shifted semidefinite cones)
// where p packs the upper triangles of P_i followed by the rows Q_i, and s
// stacks S1 = -sym(P A_bar - Q^T H - P RL), S2_i = sym(P_i D), S3_i = I - P_i.
class DouglasRachford {
 public:
  DouglasRachford(const LMIProblem& problem, const SolveOptions& options)
      : pr_(problem), opt_(options), n_(problem.n), N_(problem.N) {
    tri_ = n_ * (n_ + 1) / 2;
    nv_ = N_ * (tri_ + n_);
    s1_ = n_ * N_ * n_ * N_;
    ns_ = s1_ + 2 * N_ * n_ * n_;
    build_operator();
    reset();
  }

  struct Targets {
    double eps1, eps2;
  };

  struct Margins {
    double injection, dilation, upper, pd;
  };

  // Runs until the affine iterate satisfies the unshifted targets or the
  // iteration cap. Returns true on success; the iterate is kept either way.
  bool run(const Targets& t, std::size_t& iterations) {
    const double f = opt_.interior_factor;
    for (std::size_t it = 0; it < opt_.max_iterations; ++it) {
      project_affine(p_, s_, pg_, sg_);
      if (it % opt_.check_every == 0) {
        last_ = margins(sg_);
        if (last_.injection >= t.eps1 && last_.dilation >= t.eps2 && last_.upper >= 0.0 &&
            last_.pd > opt_.tolerance) {
          iterations += it;
          return true;
        }
      }
      for (std::size_t k = 0; k < nv_; ++k) rp_[k] = 2.0 * pg_[k] - p_[k];
      for (std::size_t k = 0; k < ns_; ++k) rs_[k] = 2.0 * sg_[k] - s_[k];
      project_cones(rp_, rs_, t.eps1 * f, t.eps2 * f, opt_.upper_shift);
      for (std::size_t k = 0; k < nv_; ++k) p_[k] += rp_[k] - pg_[k];
      for (std::size_t k = 0; k < ns_; ++k) s_[k] += rs_[k] - sg_[k];
    }
    project_affine(p_, s_, pg_, sg_);
    last_ = margins(sg_);
    iterations += opt_.max_iterations;
    return last_.injection >= t.eps1 && last_.dilation >= t.eps2 && last_.upper >= 0.0 &&
           last_.pd > opt_.tolerance;
  }

  const Margins& last_margins() const { return last_; }

  struct State {
    Vector p, s;
  };
  State save() const { return {p_, s_}; }
  void restore(const State& st) {
    p_ = st.p;
    s_ = st.s;
  }

  LMICertificate certificate() const {
    LMICertificate c;
    unpack(pg_, c.p_blocks, c.q_rows);
    return c;
  }

 private:
  void unpack(const Vector& p, std::vector<DenseMatrix>& P, std::vector<Vector>& Q) const {
    P.assign(N_, DenseMatrix(n_, n_));
    Q.assign(N_, Vector(n_, 0.0));
    std::size_t k = 0;
    for (std::size_t i = 0; i < N_; ++i)
      for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = a; b < n_; ++b, ++k) P[i](a, b) = P[i](b, a) = p[k];
    for (std::size_t i = 0; i < N_; ++i)
      for (std::size_t a = 0; a < n_; ++a, ++k) Q[i][a] = p[k];
  }

  // Linear part of the map p -> s (constant dropped).
  Vector apply_linear(const Vector& p) const {
    LMICertificate c;
    unpack(p, c.p_blocks, c.q_rows);
    Vector s(ns_, 0.0);
    const DenseMatrix s1 = injection_lmi_matrix(pr_, c) * -1.0;
    std::copy(s1.data().begin(), s1.data().end(), s.begin());
    std::size_t off = s1_;
    for (std::size_t i = 0; i < N_; ++i) {
      for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = 0; b < n_; ++b)
          s[off + a * n_ + b] = c.p_blocks[i](a, b) * (pr_.d_bar[i * n_ + a] + pr_.d_bar[i * n_ + b]);
      off += n_ * n_;
    }
    for (std::size_t i = 0; i < N_; ++i) {
      for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = 0; b < n_; ++b) s[off + a * n_ + b] = -c.p_blocks[i](a, b);
      off += n_ * n_;
    }
    return s;
  }

  void build_operator() {
    op_ = DenseMatrix(ns_, nv_);
    Vector e(nv_, 0.0);
    for (std::size_t k = 0; k < nv_; ++k) {
      e[k] = 1.0;
      const Vector col = apply_linear(e);
      e[k] = 0.0;
      for (std::size_t r = 0; r < ns_; ++r) op_(r, k) = col[r];
    }
    constant_.assign(ns_, 0.0);
    std::size_t off = s1_ + N_ * n_ * n_;
    for (std::size_t i = 0; i < N_; ++i, off += n_ * n_)
      for (std::size_t a = 0; a < n_; ++a) constant_[off + a * n_ + a] = 1.0;

    DenseMatrix normal = DenseMatrix::identity(nv_);
    for (std::size_t a = 0; a < nv_; ++a)
      for (std::size_t b = a; b < nv_; ++b) {
        double v = 0.0;
        for (std::size_t r = 0; r < ns_; ++r) v += op_(r, a) * op_(r, b);
        normal(a, b) += v;
        if (a != b) normal(b, a) += v;
      }
    chol_ = numerics::cholesky(normal);
    op_t_ = op_.transpose();

    pg_.assign(nv_, 0.0);
    sg_.assign(ns_, 0.0);
    rp_.assign(nv_, 0.0);
    rs_.assign(ns_, 0.0);
  }

  void reset() {
    p_.assign(nv_, 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < N_; ++i)
      for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = a; b < n_; ++b, ++k) p_[k] = (a == b) ? 0.5 : 0.0;
    s_ = op_ * p_;
    for (std::size_t r = 0; r < ns_; ++r) s_[r] += constant_[r];
  }

  // argmin |p' - p|^2 + |A p' + c - s|^2, then s' = A p' + c.
  void project_affine(const Vector& p, const Vector& s, Vector& pg, Vector& sg) const {
    Vector rhs(p);
    for (std::size_t a = 0; a < nv_; ++a) {
      double v = 0.0;
      for (std::size_t r = 0; r < ns_; ++r) v += op_t_(a, r) * (s[r] - constant_[r]);
      rhs[a] += v;
    }
    pg = numerics::cholesky_solve(chol_, rhs);
    for (std::size_t r = 0; r < ns_; ++r) {
      double v = constant_[r];
      for (std::size_t a = 0; a < nv_; ++a) v += op_(r, a) * pg[a];
      sg[r] = v;
    }
  }

  DenseMatrix view(const Vector& s, std::size_t off, std::size_t dim) const {
    return DenseMatrix(dim, dim, Vector(s.begin() + static_cast<std::ptrdiff_t>(off),
                                        s.begin() + static_cast<std::ptrdiff_t>(off + dim * dim)));
  }

  void store(Vector& s, std::size_t off, const DenseMatrix& m) const {
    std::copy(m.data().begin(), m.data().end(), s.begin() + static_cast<std::ptrdiff_t>(off));
  }

  void project_cones(Vector& p, Vector& s, double shift1, double shift2, double shift3) const {
    if (opt_.q_norm_bound > 0.0) {
      const std::size_t q0 = N_ * tri_;
      for (std::size_t i = 0; i < N_; ++i) {
        double nq = 0.0;
        for (std::size_t a = 0; a < n_; ++a) nq += p[q0 + i * n_ + a] * p[q0 + i * n_ + a];
        nq = std::sqrt(nq);
        if (nq > opt_.q_norm_bound) {
          for (std::size_t a = 0; a < n_; ++a) p[q0 + i * n_ + a] *= opt_.q_norm_bound / nq;
        }
      }
    }
    const std::size_t dim = n_ * N_;
    store(s, 0, numerics::project_psd(view(s, 0, dim), shift1));
    std::size_t off = s1_;
    for (std::size_t i = 0; i < N_; ++i, off += n_ * n_) store(s, off, numerics::project_psd(view(s, off, n_), shift2));
    for (std::size_t i = 0; i < N_; ++i, off += n_ * n_) store(s, off, numerics::project_psd(view(s, off, n_), shift3));
  }

  Margins margins(const Vector& s) const {
    Margins m{};
    m.injection = numerics::lambda_min(view(s, 0, n_ * N_));
    m.dilation = std::numeric_limits<double>::infinity();
    m.upper = std::numeric_limits<double>::infinity();
    m.pd = std::numeric_limits<double>::infinity();
    std::size_t off = s1_;
    for (std::size_t i = 0; i < N_; ++i, off += n_ * n_) {
      m.dilation = std::min(m.dilation, numerics::lambda_min(view(s, off, n_)));
    }
    for (std::size_t i = 0; i < N_; ++i, off += n_ * n_) {
      const auto w = numerics::sym_eigenvalues(view(s, off, n_));  // eigenvalues of I - P_i
      m.upper = std::min(m.upper, w.front());
      m.pd = std::min(m.pd, 1.0 - w.back());
    }
    return m;
  }

  const LMIProblem& pr_;
  const SolveOptions& opt_;
  std::size_t n_, N_, tri_ = 0, nv_ = 0, s1_ = 0, ns_ = 0;
  DenseMatrix op_, op_t_, chol_;
  Vector constant_;
  Vector p_, s_, pg_, sg_, rp_, rs_;
  Margins last_{};
};

std::vector<CheckResult> margins_as_checks(const DouglasRachford::Margins& m, double eps1, double eps2) {
  return {
      {kCheckPd, m.pd, m.pd > 0.0},
      {kCheckInjection, m.injection - eps1, m.injection >= eps1},
      {kCheckDilation, m.dilation - eps2, m.dilation >= eps2},
      {kCheckUpper, m.upper, m.upper >= 0.0},
  };
}

std::string blocking_name(const DouglasRachford::Margins& m, double eps1, double eps2) {
  // Compare violations relative to their targets.
  struct Entry {
    const char* name;
    double score;
  };
  const Entry entries[] = {
      {kCheckInjection, (m.injection - eps1) / std::max(eps1, 1e-12)},
      {kCheckDilation, (m.dilation - eps2) / std::max(eps2, 1e-12)},
      {kCheckUpper, m.upper},
      {kCheckPd, m.pd},
  };
  const auto* worst = std::min_element(std::begin(entries), std::end(entries),
                                       [](const Entry& a, const Entry& b) { return a.score < b.score; });
  return worst->name;
}

}  // namespace

SolveResult solve_feasibility(const LMIProblem& problem, const SolveOptions& options) {
  if (!(options.tolerance > 0.0)) throw ValidationError("solve_feasibility: tolerance must be positive");
  if (options.max_iterations == 0 || options.check_every == 0) {
    throw ValidationError("solve_feasibility: iteration counts must be positive");
  }
  SolveResult result;
  const double eps3 = 1.0;
  const double eps2 = std::max(problem.eps2_ratio() * eps3, options.eps2_floor);
  const double d_min = *std::min_element(problem.d_bar.begin(), problem.d_bar.end());

  // e_k^T sym(P D) e_k = 2 d_k P_kk <= 2 d_min eps3 for a k with d_k = d_min,
  // so no (P, Q) can meet the dilation, upper-bound and prescribed-time
  // conditions once eps2 exceeds that ceiling.
  const double ceiling = 2.0 * d_min * eps3;
  if (eps2 > ceiling) {
    std::ostringstream os;
    os << "the prescribed-time condition forces eps2 >= " << eps2 << " per unit eps3, beyond the ceiling " << ceiling
       << " that the dilation and upper-bound conditions allow (undecided; increase mu_star or reduce k_f)";
    result.blocking_constraint = kCheckPrescribed;
    result.message = os.str();
    result.residuals.push_back({kCheckPrescribed, ceiling - eps2, false});
    return result;
  }

  DouglasRachford dr(problem, options);
  auto finish = [&](double eps1) {
    LMICertificate cert = dr.certificate();
    cert.eps1 = eps1;
    cert.eps2 = eps2;
    cert.eps3 = eps3;
    cert.mu_star = problem.mu_star;
    cert.t_star = t_star_for(problem.mu_star, problem.t0, problem.T);
    return cert;
  };
  auto attempt = [&](double eps1) -> std::optional<LMICertificate> {
    ++result.attempts;
    if (!dr.run({eps1, eps2}, result.iterations)) return std::nullopt;
    LMICertificate cert = finish(eps1);
    if (!verify_certificate(problem, cert, options.tolerance).passed) return std::nullopt;
    return cert;
  };

  // Find any feasible eps1, shrinking from eps1_start.
  double lo = options.eps1_start;
  std::optional<LMICertificate> best;
  while (lo >= options.eps1_min) {
    best = attempt(lo);
    if (best) break;
    lo /= 10.0;
  }
  if (!best) {
    const auto& m = dr.last_margins();
    const double eps1 = std::max(lo * 10.0, options.eps1_min);
    result.residuals = margins_as_checks(m, eps1, eps2);
    result.residuals.push_back({kCheckPrescribed, 0.0, true});
    result.blocking_constraint = blocking_name(m, eps1, eps2);
    result.message = "iteration cap reached without a feasible point (undecided); blocking: " +
                     result.blocking_constraint;
    return result;
  }

  // Push eps1 up: grow geometrically, then bisect between the last success and
  // the first failure. Each attempt warm-starts from the last success.
  auto state = dr.save();
  double hi = 0.0;
  for (std::size_t g = 0; g < options.growth_steps; ++g) {
    const double trial = lo * 2.0;
    if (auto c = attempt(trial)) {
      best = c;
      lo = trial;
      state = dr.save();
    } else {
      hi = trial;
      dr.restore(state);
      break;
    }
  }
  if (hi > 0.0) {
    for (std::size_t b = 0; b < options.bisection_steps; ++b) {
      const double mid = 0.5 * (lo + hi);
      if (auto c = attempt(mid)) {
        best = c;
        lo = mid;
        state = dr.save();
      } else {
        hi = mid;
        dr.restore(state);
      }
    }
  }

  result.status = SolveStatus::kFeasible;
  result.certificate = best;
  result.residuals = verify_certificate(problem, *best, options.tolerance).checks;
  std::ostringstream os;
  os << "feasible with eps1 = " << best->eps1 << ", eps2 = " << best->eps2 << ", eps3 = " << best->eps3;
  result.message = os.str();
  return result;
}

SolveResult search_mu_star(LMIProblem problem, const std::vector<double>& grid,
                           const SolveOptions& options) {
  if (grid.empty()) throw ValidationError("search_mu_star: empty grid");
  SolveResult last;
  for (double mu_star : grid) {
    if (!(mu_star >= 1.0)) throw ValidationError("search_mu_star: grid values must be >= 1");
    problem.mu_star = mu_star;
    last = solve_feasibility(problem, options);
    if (last.status == SolveStatus::kFeasible) return last;
  }
  return last;
}

ObserverGains extract_gains(const LMICertificate& cert) {
  ObserverGains gains;
  if (cert.p_blocks.size() != cert.q_rows.size()) {
    throw ValidationError("extract_gains: P and Q counts differ");
  }
  for (std::size_t i = 0; i < cert.p_blocks.size(); ++i) {
    const auto& P = cert.p_blocks[i];
    const auto w = numerics::sym_eigenvalues(P);
    const double cond = w.front() > 0.0 ? w.back() / w.front() : std::numeric_limits<double>::infinity();
    if (!(w.front() > 0.0) || cond > 1e12) {
      std::ostringstream os;
      os << "P_" << i + 1 << " is numerically singular (condition estimate " << cond << ")";
      throw NumericalError(os.str());
    }
    const DenseMatrix l = numerics::cholesky(P);
    Vector L = numerics::cholesky_solve(l, cert.q_rows[i]);
    for (double v : L) {
      if (!std::isfinite(v)) throw NumericalError("extract_gains: non-finite gain");
    }
    gains.L.push_back(std::move(L));
  }
  return gains;
}

double pick_t_star(double mu_star, const gains::GainSchedule& schedule) {
  if (!(mu_star >= 1.0)) throw DomainError("pick_t_star: mu_star must be >= 1");
  return t_star_for(mu_star, schedule.t0, schedule.T);
}

}  // namespace ptonet::synthesis
