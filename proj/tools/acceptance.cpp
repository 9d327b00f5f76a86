#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "ptonet/error.hpp"
#include "ptonet/scenario.hpp"
#include "ptonet/simulation.hpp"
#include "svg.hpp"

namespace ptonet::tools {

namespace {

namespace fs = std::filesystem;
using numerics::DenseMatrix;
using numerics::Vector;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

AcceptanceRow row(int id, std::string title, bool ok, std::string detail) {
  return {id, std::move(title), ok ? RowStatus::kPass : RowStatus::kFail, std::move(detail)};
}

// Everything derived once from the bundled example.
struct Example {
  scenario::ScenarioFile file;
  plant::PlantModel plant;
  graph::ValidatedDigraph graph;
  double kf = 0.0;
};

Example load_example(const AcceptanceOptions& o) {
  Example ex;
  ex.file = scenario::example_scenario(false);
  ex.file.schedule.delta = o.delta;
  ex.file.schedule.validate();
  ex.file.output.grid = o.grid;
  ex.plant = scenario::build_plant(ex.file);
  ex.graph = graph::validate_digraph(ex.file.adjacency);
  ex.kf = plant::compute_kf(ex.plant.structure, ex.plant.nonlinearity.gammas);
  return ex;
}

// ---- property-suite oracles -------------------------------------------------

// Left Perron vector of the row-stochastic I - h L by power iteration on its
// transpose, normalized to sum N.
Vector perron_oracle(const DenseMatrix& lap) {
  const std::size_t N = lap.rows();
  double dmax = 0.0;
  for (std::size_t i = 0; i < N; ++i) dmax = std::max(dmax, lap(i, i));
  const double h = 1.0 / (1.0 + dmax);
  Vector r(N, 1.0), next(N);
  for (int it = 0; it < 200000; ++it) {
    for (std::size_t j = 0; j < N; ++j) {
      double v = r[j];
      for (std::size_t i = 0; i < N; ++i) v -= h * lap(i, j) * r[i];
      next[j] = v;
    }
    double s = 0.0, diff = 0.0;
    for (double v : next) s += v;
    for (std::size_t j = 0; j < N; ++j) {
      next[j] *= static_cast<double>(N) / s;
      diff = std::max(diff, std::abs(next[j] - r[j]));
    }
    r.swap(next);
    if (diff < 1e-14) break;
  }
  return r;
}

DenseMatrix random_strongly_connected(std::mt19937_64& rng, std::size_t N) {
  std::uniform_real_distribution<double> weight(0.1, 2.0), coin(0.0, 1.0);
  std::vector<std::size_t> perm(N);
  for (std::size_t k = 0; k < N; ++k) perm[k] = k;
  std::shuffle(perm.begin(), perm.end(), rng);
  DenseMatrix a(N, N);
  if (N > 1) {
    for (std::size_t k = 0; k < N; ++k) a(perm[(k + 1) % N], perm[k]) = weight(rng);
  }
  const double p = coin(rng) * 0.5;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      if (i != j && a(i, j) == 0.0 && coin(rng) < p) a(i, j) = weight(rng);
  return a;
}

std::string digraph_suite(std::mt19937_64& rng, std::size_t count, bool& ok) {
  std::uniform_int_distribution<std::size_t> size(1, 8);
  double worst_r = 0.0, worst_null = 0.0, worst_psd = 0.0, worst_ones = 0.0;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t N = size(rng);
    const DenseMatrix a = random_strongly_connected(rng, N);
    graph::ValidatedDigraph g;
    try {
      g = graph::validate_digraph(a);
    } catch (const Error& e) {
      ok = false;
      return std::string("rejected a strongly connected graph: ") + e.what();
    }
    const Vector oracle = perron_oracle(g.laplacian);
    double sum = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      worst_r = std::max(worst_r, std::abs(g.r[i] - oracle[i]));
      if (!(g.r[i] > 0.0)) ok = false;
      sum += g.r[i];
      scale = std::max(scale, std::abs(g.laplacian(i, i)));
    }
    if (std::abs(sum - static_cast<double>(N)) > 1e-9 * N) ok = false;
    for (std::size_t j = 0; j < N; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < N; ++i) v += g.r[i] * g.laplacian(i, j);
      worst_null = std::max(worst_null, std::abs(v) / scale);
    }
    // L_hat = R L + L^T R assembled independently.
    DenseMatrix lhat(N, N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) lhat(i, j) = g.r[i] * g.laplacian(i, j) + g.laplacian(j, i) * g.r[j];
    for (std::size_t i = 0; i < N; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < N; ++j) row += lhat(i, j);
      worst_ones = std::max(worst_ones, std::abs(row) / scale);
    }
    worst_psd = std::min(worst_psd, numerics::lambda_min(lhat) / scale);
  }
  if (worst_r > 1e-6 || worst_null > 1e-9 || worst_psd < -1e-9 || worst_ones > 1e-9) ok = false;
  return "max |r - oracle| " + num(worst_r) + ", max |r L| " + num(worst_null) + ", min lambda(L_hat) " +
         num(worst_psd) + ", max |L_hat 1| " + num(worst_ones);
}

std::string observability_suite(std::mt19937_64& rng, std::size_t count, bool& ok) {
  std::uniform_int_distribution<std::size_t> blocks(1, 5), size(1, 4);
  std::size_t passed = 0, detected = 0;
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<std::size_t> b(blocks(rng));
    for (auto& v : b) v = size(rng);
    const plant::CanonicalStructure st(b);
    const auto m = plant::build_canonical(st);
    const auto rep = plant::check_joint_observability(m.A, m.H);
    if (rep.observable && rep.rank == st.state_dim()) ++passed;
    // Dropping one sensor must break observability.
    DenseMatrix h = m.H;
    for (std::size_t k = 0; k < h.cols(); ++k) h(0, k) = 0.0;
    if (!plant::check_joint_observability(m.A, h).observable) ++detected;
  }
  ok = ok && passed == count && detected == count;
  return std::to_string(passed) + "/" + std::to_string(count) + " observable, " + std::to_string(detected) + "/" +
         std::to_string(count) + " sensor-drop controls detected";
}

struct GenExpr {
  std::string text;
  std::function<double(const Vector&)> eval;
};

// Random expression over the variables of blocks 1..max_block with a direct
// evaluator for comparison.
GenExpr random_expr(std::mt19937_64& rng, const plant::CanonicalStructure& st, std::size_t max_block, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  const int kind = pick(rng);
  if (kind == 0) {
    const double c = std::round(coef(rng) * 1000.0) / 1000.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", std::abs(c));
    const std::string lit = buf;
    if (c < 0) return {"(-" + lit + ")", [c](const Vector&) { return c; }};
    return {lit, [c](const Vector&) { return c; }};
  }
  if (kind == 1) {
    std::uniform_int_distribution<std::size_t> b(0, max_block - 1);
    const std::size_t blk = b(rng);
    std::uniform_int_distribution<std::size_t> e(0, st.block_size(blk) - 1);
    const std::size_t k = e(rng);
    const std::size_t slot = st.offset(blk) + k;
    return {"x" + std::to_string(blk + 1) + "_" + std::to_string(k + 1), [slot](const Vector& x) { return x[slot]; }};
  }
  GenExpr a = random_expr(rng, st, max_block, depth - 1);
  switch (kind) {
    case 2: {
      GenExpr b = random_expr(rng, st, max_block, depth - 1);
      return {"(" + a.text + " + " + b.text + ")", [a, b](const Vector& x) { return a.eval(x) + b.eval(x); }};
    }
    case 3: {
      GenExpr b = random_expr(rng, st, max_block, depth - 1);
      return {"(" + a.text + " - " + b.text + ")", [a, b](const Vector& x) { return a.eval(x) - b.eval(x); }};
    }
    case 4: {
      GenExpr b = random_expr(rng, st, max_block, depth - 1);
      return {"(" + a.text + "*" + b.text + ")", [a, b](const Vector& x) { return a.eval(x) * b.eval(x); }};
    }
    case 5: {
      GenExpr b = random_expr(rng, st, max_block, depth - 1);
      return {"(" + a.text + "/(1 + (" + b.text + ")^2))",
              [a, b](const Vector& x) { const double d = b.eval(x); return a.eval(x) / (1.0 + d * d); }};
    }
    case 6: return {"sin(" + a.text + ")", [a](const Vector& x) { return std::sin(a.eval(x)); }};
    case 7: return {"cos(" + a.text + ")", [a](const Vector& x) { return std::cos(a.eval(x)); }};
    case 8: return {"tanh(" + a.text + ")", [a](const Vector& x) { return std::tanh(a.eval(x)); }};
    default: return {"(-abs(" + a.text + "))", [a](const Vector& x) { return -std::abs(a.eval(x)); }};
  }
}

std::string expression_suite(std::mt19937_64& rng, std::size_t count, bool& ok) {
  std::uniform_int_distribution<std::size_t> blocks(1, 4), size(1, 3);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::size_t cases = 0, mismatches = 0;
  double worst = 0.0;
  while (cases < count) {
    std::vector<std::size_t> b(blocks(rng));
    for (auto& v : b) v = size(rng);
    const plant::CanonicalStructure st(b);
    std::vector<std::string> lines;
    std::vector<GenExpr> gens;
    for (std::size_t i = 0; i < st.subsystems(); ++i) {
      gens.push_back(random_expr(rng, st, i + 1, 4));
      lines.push_back(gens.back().text);
    }
    const auto program = plant::parse_nonlinearity(lines, st, Vector(st.subsystems(), 1.0));
    Vector x(st.state_dim());
    for (auto& v : x) v = val(rng);
    const Vector got = plant::eval_nonlinearity(program, x);
    for (std::size_t i = 0; i < st.subsystems() && cases < count; ++i, ++cases) {
      const double want = gens[i].eval(x);
      const double err = std::abs(got[i] - want) / std::max(1.0, std::abs(want));
      worst = std::max(worst, err);
      if (err > 1e-12) ++mismatches;
    }
  }
  ok = ok && mismatches == 0;
  return std::to_string(count - mismatches) + "/" + std::to_string(count) + " expressions match, max rel err " +
         num(worst);
}

simulation::Scenario linear_two_block(const synthesis::ObserverGains& gains) {
  plant::CanonicalStructure st({2, 1});
  auto program = plant::parse_nonlinearity(std::vector<std::string>{"0", "0"}, st, {0.0, 0.0});
  simulation::Scenario sc;
  sc.plant = plant::make_plant(st, program);
  sc.graph = graph::validate_digraph({{0, 1}, {1, 0}});
  sc.schedule.T = 1.0;
  sc.schedule.m = 1;
  sc.gains = gains;
  sc.x0 = {1.0, -1.0, 0.5};
  sc.z0.assign(2, Vector(3, 0.0));
  sc.grid_points = 400;
  return sc;
}

void export_trajectory(const AcceptanceOptions& o, const std::string& name, const simulation::Trajectory& tr,
                       std::size_t n, std::size_t N) {
  if (o.out_dir.empty()) return;
  std::ofstream os(fs::path(o.out_dir) / (name + ".csv"));
  simulation::write_csv(os, tr, n, N);
  if (!o.svg) return;
  std::vector<Series> series(N);
  for (std::size_t i = 0; i < N; ++i) series[i].name = "|e^" + std::to_string(i + 1) + "|";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const auto norms = tr.error_norms(k, N);
    for (std::size_t i = 0; i < N; ++i) {
      series[i].x.push_back(tr.times[k]);
      series[i].y.push_back(norms[i]);
    }
  }
  PlotOptions po;
  po.title = "observer error norms (" + name + ")";
  po.y_label = "error norm";
  po.log_y = true;
  std::ofstream(fs::path(o.out_dir) / (name + ".svg")) << render_line_plot(series, po);
}

}  // namespace

double convergence_threshold(double delta) { return delta <= 0.005 ? 1e-3 : 1e-2; }

std::uint64_t seed_from_env(std::uint64_t fallback) {
  if (const char* s = std::getenv("PTONET_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end != s && *end == '\0') return v;
  }
  return fallback;
}

std::string format_row(const AcceptanceRow& r) {
  const char* tag = r.status == RowStatus::kPass ? "PASS" : r.status == RowStatus::kFail ? "FAIL" : "N/A ";
  char head[16];
  std::snprintf(head, sizeof head, "%2d", r.id);
  return std::string("[") + tag + "] " + head + " " + r.title + ": " + r.detail;
}

std::vector<AcceptanceRow> run_acceptance(const AcceptanceOptions& o, std::ostream& log) {
  std::vector<AcceptanceRow> rows;
  const Example ex = load_example(o);
  const std::size_t n = ex.plant.structure.state_dim(), N = ex.plant.structure.subsystems();
  const double threshold = convergence_threshold(o.delta);
  const double mu_star = o.mu_star.value_or(100.0);
  const auto clock = std::chrono::steady_clock::now();
  auto stamp = [&](const std::string& what) {
    log << "  .. " << what << " ("
        << num(std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count()) << " s)\n";
  };

  // 1. left eigenvector
  {
    const Vector expected{0.8, 1.6, 0.8, 0.8};
    double dev = 0.0;
    for (std::size_t i = 0; i < N; ++i) dev = std::max(dev, std::abs(ex.graph.r[i] - expected[i]));
    rows.push_back(row(1, "left eigenvector r = (0.8, 1.6, 0.8, 0.8)", dev <= 1e-9,
                       "max deviation " + num(dev) + " (tol 1e-9)"));
  }

  // 2. k_f
  {
    const double oracle = std::sqrt(688.0);
    const bool ok = std::abs(ex.kf - oracle) <= 1e-12 * oracle && std::abs(ex.kf - 26.2) <= 0.1;
    rows.push_back(row(2, "k_f = sqrt(688) ~ 26.2", ok, "k_f = " + num(ex.kf) + ", |k_f - 26.2| = " + num(std::abs(ex.kf - 26.2))));
  }

  // 3. mu* / t*
  {
    gains::GainSchedule s;
    s.T = 2.0;
    const double m = gains::mu(1.98, s).value;
    const double t = synthesis::pick_t_star(100.0, s);
    const bool ok = std::abs(m - 100.0) <= 1e-12 * 100.0 && std::abs(t - 1.98) <= 1e-12;
    char buf[128];
    std::snprintf(buf, sizeof buf, "mu(1.98) = %.17g, pick_t_star(100) = %.17g", m, t);
    rows.push_back(row(3, "mu(1.98; 0, 2) = 100 and t* = 1.98", ok, buf));
  }

  // 4. reference-gain convergence
  auto reference = scenario::build_simulation(ex.file, ex.plant, ex.graph, scenario::reference_gains());
  const auto tr_pub = simulation::simulate(reference);
  stamp("reference-gain simulation");
  {
    const double ratio = simulation::terminal_error_ratio(tr_pub, N);
    rows.push_back(row(4, "reference-gain convergence", !tr_pub.truncated && ratio <= threshold,
                       "terminal error ratio " + num(ratio) + " <= " + num(threshold) +
                           " (the artifact's proxy threshold)" +
                           (tr_pub.truncated ? "; TRUNCATED: " + tr_pub.diagnostic : "")));
  }
  if (o.export_reference_gains) export_trajectory(o, "trajectory_reference_gains", tr_pub, n, N);

  // 5. synthesis round trip
  const auto problem = synthesis::assemble_problem(ex.plant, ex.graph, ex.file.schedule, ex.kf, mu_star);
  const auto solved = synthesis::solve_feasibility(problem);
  stamp("synthesis");
  std::optional<synthesis::LMICertificate> cert = solved.certificate;
  std::optional<synthesis::ObserverGains> synth_gains;
  simulation::Scenario synthesized;
  if (!cert) {
    rows.push_back(row(5, "synthesis round trip", false, "undecided: " + solved.message));
  } else {
    const auto ver = synthesis::verify_certificate(problem, *cert, 1e-7);
    synth_gains = synthesis::extract_gains(*cert);
    synthesized = scenario::build_simulation(ex.file, ex.plant, ex.graph, *synth_gains);
    synthesized.extra_times.push_back(cert->t_star);
    const auto tr = simulation::simulate(synthesized);
    stamp("synthesized-gain simulation");
    const double ratio = simulation::terminal_error_ratio(tr, N);
    rows.push_back(row(5, "synthesis round trip", ver.passed && !tr.truncated && ratio <= threshold,
                       std::string("certificate ") + (ver.passed ? "verified" : "REJECTED") + " at 1e-7 (eps1 " +
                           num(cert->eps1) + ", eps2 " + num(cert->eps2) + "), terminal error ratio " + num(ratio)));
  }

  // 6. decay envelope
  if (!cert) {
    rows.push_back(row(6, "decay envelope", false, "no certificate"));
  } else {
    const double t_end = ex.file.schedule.stop_time();
    std::string detail;
    bool ok = true;
    bool applicable = cert->t_star <= t_end;
    if (applicable) {
      const auto zeta_run = simulation::integrate_transformed(synthesized, synthesized.schedule.t0, synthesized.x0,
                                                              tr_pub.e.front());
      stamp("transformed-coordinate run");
      const auto rep = simulation::check_envelope(zeta_run, *cert, synthesized.schedule, 1.1);
      ok = rep.passed && !zeta_run.truncated;
      detail = "example: " + std::to_string(rep.samples_checked) + " samples on [" + num(cert->t_star) + ", " +
               num(t_end) + "], max |zeta|/bound " + num(rep.max_ratio) + ", " + std::to_string(rep.violations) +
               " violations, " + std::to_string(rep.v_increase_violations) + " V increases";
      if (!o.export_reference_gains) {
        auto exported = zeta_run;
        simulation::attach_certificate(exported, *cert, synthesized.schedule);
        export_trajectory(o, "trajectory_synthesized_gains", exported, n, N);
      }
    } else {
      detail = "example: window empty (t* = " + num(cert->t_star) + " > t_end = " + num(t_end) + ")";
    }
    // Linear two-block system, k_f = 0, mu* = 1: the envelope holds from t0.
    auto lin = linear_two_block({});
    const auto lin_problem = synthesis::assemble_problem(lin.plant, lin.graph, lin.schedule, 0.0, 1.0);
    const auto lin_solved = synthesis::solve_feasibility(lin_problem);
    if (!lin_solved.certificate) {
      ok = false;
      detail += "; linear system undecided: " + lin_solved.message;
    } else {
      lin.gains = synthesis::extract_gains(*lin_solved.certificate);
      Vector e0;
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 3; ++k) e0.push_back(lin.x0[k] - lin.z0[i][k]);
      const auto run = simulation::integrate_transformed(lin, lin.schedule.t0, lin.x0, e0);
      const auto rep = simulation::check_envelope(run, *lin_solved.certificate, lin.schedule, 1.1);
      ok = ok && rep.passed && !run.truncated;
      detail += "; linear system from t0: " + std::to_string(rep.samples_checked) + " samples, max ratio " +
                num(rep.max_ratio) + ", " + std::to_string(rep.violations) + " violations";
    }
    if (!applicable && ok) {
      rows.push_back({6, "decay envelope", RowStatus::kNotApplicable, detail});
    } else {
      rows.push_back(row(6, "decay envelope", ok, detail));
    }
  }

  // 7. Lipschitz aggregate sampling
  {
    const auto box = simulation::trajectory_box(tr_pub);
    const auto rep = simulation::check_lipschitz_bound(ex.plant, ex.file.schedule, box, 10000, o.seed);
    rows.push_back(row(7, "Lipschitz aggregate inequalities (1e4 samples)", rep.passed() && rep.warning.empty(),
                       "max stacked ratio " + num(rep.max_stacked_ratio) + ", max per-block ratio " +
                           num(rep.max_block_ratio) + ", violations " + std::to_string(rep.stacked_violations) + "/" +
                           std::to_string(rep.block_violations) + (rep.warning.empty() ? "" : "; " + rep.warning)));
  }

  // 8. error-dynamics equivalence
  {
    const auto tr_err = simulation::simulate_error_dynamics(reference);
    stamp("error-dynamics run");
    const double dev = simulation::relative_sup_deviation(tr_err.e, tr_pub.e);
    rows.push_back(row(8, "error dynamics vs x - z", !tr_err.truncated && dev <= 1e-6,
                       "relative sup deviation " + num(dev) + " (tol 1e-6)"));
  }

  // 9. m-sweep ordering
  {
    const double probe = 1.5;
    const auto sweep = run_m_sweep(ex.file, {1, 2, 3}, probe, probe,
                                   {mu_star, 2 * mu_star, 4 * mu_star, 10 * mu_star}, true);
    stamp("m-sweep");
    std::string detail;
    for (const auto& r : sweep.runs) {
      detail += (detail.empty() ? "" : ", ") + std::string("m=") + std::to_string(r.m) + ": " +
                (r.ok ? num(r.probe) + " (mu* " + num(r.mu_star) + ")" : r.message);
    }
    rows.push_back(row(9, "|e^1_12(1.5)| strictly decreasing in m", sweep.strictly_decreasing, detail));
  }

  // 10. property suites
  {
    std::mt19937_64 rng(o.seed);
    bool ok = true;
    const std::string d1 = digraph_suite(rng, 100, ok);
    const std::string d2 = observability_suite(rng, 20, ok);
    const std::string d3 = expression_suite(rng, 1000, ok);
    rows.push_back(row(10, "graph / structure / expression property suites", ok, d1 + "; " + d2 + "; " + d3));
  }
  return rows;
}

}  // namespace ptonet::tools
