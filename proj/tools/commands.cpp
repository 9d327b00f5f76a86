#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "acceptance.hpp"
#include "ptonet/error.hpp"
#include "svg.hpp"

namespace ptonet::tools {

namespace fs = std::filesystem;
using scenario::Json;
using scenario::ScenarioFile;

namespace {

class Report {
 public:
  explicit Report(std::string command) : start_(std::chrono::steady_clock::now()) { doc_["command"] = command; }
  Json& metrics() { return doc_["metrics"]; }
  void wrote(const fs::path& p) { doc_["paths"].push_back(p.string()); }

  void save(const std::string& dir) {
    doc_["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (!doc_.contains("paths")) doc_["paths"] = Json::array();
    const fs::path p = fs::path(dir) / (doc_["command"].get<std::string>() + "_report.json");
    doc_["paths"].push_back(p.string());
    std::ofstream(p) << doc_.dump(2) << '\n';
  }

 private:
  std::chrono::steady_clock::time_point start_;
  Json doc_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string vec(const std::vector<double>& v) {
  std::string s = "(";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + num(v[k]);
  return s + ")";
}

ScenarioFile load(const CommandOptions& o) {
  if (o.scenario_path.empty()) throw ValidationError("--scenario is required");
  ScenarioFile f = scenario::load_scenario(o.scenario_path);
  if (o.delta) {
    f.schedule.delta = *o.delta;
    f.schedule.validate();
  }
  if (o.grid) {
    if (*o.grid < 2) throw ValidationError("--grid must be at least 2");
    f.output.grid = *o.grid;
  }
  if (o.mu_star) {
    if (!(*o.mu_star >= 1.0)) throw ValidationError("--mu-star must be >= 1");
    if (!f.synthesis) f.synthesis = scenario::SynthesisSection{};
    f.synthesis->mu_star_grid = {*o.mu_star};
  }
  return f;
}

std::string out_dir(const CommandOptions& o, const ScenarioFile* f) {
  std::string dir = o.out_dir;
  if (f && !f->output.directory.empty() && o.out_dir == CommandOptions{}.out_dir) dir = f->output.directory;
  fs::create_directories(dir);
  return dir;
}

synthesis::SolveOptions solve_options(const ScenarioFile& f) {
  synthesis::SolveOptions o;
  if (f.synthesis) {
    o.tolerance = f.synthesis->tolerance;
    o.q_norm_bound = f.synthesis->q_norm_bound;
    o.max_iterations = f.synthesis->max_iterations;
  }
  return o;
}

void require_observable(const plant::PlantModel& plant) {
  const auto obs = plant::check_joint_observability(plant.matrices.A, plant.matrices.H);
  if (!obs.observable) {
    throw ValidationError("the pair (H, A) is not jointly observable (rank " + std::to_string(obs.rank) + " of " +
                          std::to_string(obs.required) + ")");
  }
}

struct Synthesized {
  synthesis::LMIProblem problem;
  synthesis::SolveResult result;
};

Synthesized synthesize(const ScenarioFile& f, const plant::PlantModel& plant, const graph::ValidatedDigraph& g,
                       const std::vector<double>& grid) {
  require_observable(plant);
  Synthesized s;
  s.problem = synthesis::assemble_problem(plant, g, f.schedule, scenario::effective_kf(f), grid.front());
  s.result = synthesis::search_mu_star(s.problem, grid, solve_options(f));
  if (s.result.certificate) s.problem.mu_star = s.result.certificate->mu_star;
  return s;
}

void print_checks(std::ostream& out, const std::vector<synthesis::CheckResult>& checks) {
  for (const auto& c : checks) {
    out << "  " << std::left << std::setw(22) << c.name << (c.passed ? "pass" : "FAIL") << "  margin "
        << num(c.margin) << '\n';
  }
}

Json checks_json(const std::vector<synthesis::CheckResult>& checks) {
  Json j = Json::array();
  for (const auto& c : checks) j.push_back({{"name", c.name}, {"margin", c.margin}, {"passed", c.passed}});
  return j;
}

void write_text(const fs::path& p, const std::string& text, Report& report) {
  std::ofstream(p) << text;
  report.wrote(p);
}

void write_trajectory(const fs::path& p, const simulation::Trajectory& tr, std::size_t n, std::size_t N,
                      Report& report) {
  std::ofstream os(p);
  simulation::write_csv(os, tr, n, N);
  report.wrote(p);
}

std::string error_plot(const simulation::Trajectory& tr, std::size_t N, const std::string& title) {
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
  po.title = title;
  po.y_label = "error norm";
  po.log_y = true;
  return render_line_plot(series, po);
}

std::vector<double> sweep_grid(const ScenarioFile& f) {
  std::vector<double> grid = f.synthesis ? f.synthesis->mu_star_grid : std::vector<double>{100.0};
  const double top = *std::max_element(grid.begin(), grid.end());
  for (double k : {2.0, 4.0, 10.0}) grid.push_back(k * top);
  return grid;
}

}  // namespace

int cmd_analyze_graph(const CommandOptions& o, std::ostream& out) {
  const ScenarioFile f = load(o);
  Report report("analyze-graph");
  graph::check_adjacency(f.adjacency);
  if (!graph::strongly_connected(f.adjacency)) {
    out << "strongly connected: no\n";
    throw ValidationError("communication graph is not strongly connected");
  }
  const auto g = graph::validate_digraph(f.adjacency);
  out << "strongly connected: yes\n";
  out << "Laplacian:\n";
  for (std::size_t i = 0; i < g.node_count; ++i) out << "  " << vec(g.laplacian.row_vector(i)) << '\n';
  out << "r = " << vec(g.r) << '\n';
  out << "lambda_min(R L + L^T R) = " << num(g.lhat_lambda_min) << '\n';
  report.metrics()["strongly_connected"] = true;
  report.metrics()["r"] = g.r;
  report.metrics()["lhat_lambda_min"] = g.lhat_lambda_min;
  report.save(out_dir(o, &f));
  return kExitOk;
}

int cmd_synthesize(const CommandOptions& o, std::ostream& out) {
  const ScenarioFile f = load(o);
  if (!f.synthesis) throw ValidationError("scenario has no 'synthesis' section");
  const auto plant = scenario::build_plant(f);
  const auto g = graph::validate_digraph(f.adjacency);
  Report report("synthesize");
  const auto s = synthesize(f, plant, g, f.synthesis->mu_star_grid);
  out << "k_f = " << num(s.problem.kf) << '\n';
  report.metrics()["kf"] = s.problem.kf;
  report.metrics()["message"] = s.result.message;
  const std::string dir = out_dir(o, &f);
  if (s.result.status != synthesis::SolveStatus::kFeasible) {
    out << "undecided: " << s.result.message << '\n';
    out << "residuals at the last iterate:\n";
    print_checks(out, s.result.residuals);
    report.metrics()["status"] = "undecided";
    report.metrics()["blocking_constraint"] = s.result.blocking_constraint;
    report.metrics()["residuals"] = checks_json(s.result.residuals);
    report.save(dir);
    return kExitUndecided;
  }
  const auto& cert = *s.result.certificate;
  const auto verification = synthesis::verify_certificate(s.problem, cert, f.synthesis->tolerance);
  const auto gains = synthesis::extract_gains(cert);
  out << s.result.message << ", mu* = " << num(cert.mu_star) << ", t* = " << num(cert.t_star) << '\n';
  print_checks(out, verification.checks);
  for (std::size_t i = 0; i < gains.L.size(); ++i) out << "L^" << i + 1 << " = " << vec(gains.L[i]) << '\n';
  write_text(fs::path(dir) / "certificate.json", scenario::certificate_to_json(cert).dump(2) + "\n", report);
  write_text(fs::path(dir) / "gains.json", scenario::gains_to_json(gains).dump(2) + "\n", report);
  report.metrics()["status"] = "feasible";
  report.metrics()["margins"] = checks_json(verification.checks);
  report.save(dir);
  return kExitOk;
}

int cmd_simulate(const CommandOptions& o, std::ostream& out) {
  const ScenarioFile f = load(o);
  if (!f.x0) throw ValidationError("scenario has no 'initial' section");
  if (!f.gains && !f.synthesis) throw ValidationError("scenario needs a 'gains' or a 'synthesis' section");
  const auto plant = scenario::build_plant(f);
  const auto g = graph::validate_digraph(f.adjacency);
  const std::size_t n = plant.structure.state_dim(), N = plant.structure.subsystems();
  Report report("simulate");
  if (gains::mu(f.schedule.stop_time(), f.schedule).clamped) {
    out << "warning: mu reaches mu_cap = " << num(f.schedule.mu_cap)
        << " before the stop time; the gain is held at the cap from there on\n";
    report.metrics()["mu_capped"] = true;
  }

  if (!o.m_sweep.empty()) {
    const auto sweep = run_m_sweep(f, o.m_sweep, std::nullopt, f.schedule.t0 + 0.75 * f.schedule.T,
                                   sweep_grid(f), f.synthesis.has_value());
    const std::string dir = out_dir(o, &f);
    std::vector<Series> series;
    bool truncated = false;
    for (const auto& run : sweep.runs) {
      out << "m = " << run.m << ": " << run.message;
      if (!run.ok) {
        out << '\n';
        continue;
      }
      out << ", |e^1_" << sweep.probe_entry + 1 << "(" << num(sweep.probe_time) << ")| = " << num(run.probe)
          << ", terminal ratio " << num(simulation::terminal_error_ratio(run.trajectory, N)) << '\n';
      truncated = truncated || run.trajectory.truncated;
      const std::string name = "trajectory_m" + std::to_string(run.m) + (run.trajectory.truncated ? ".partial" : "");
      write_trajectory(fs::path(dir) / (name + ".csv"), run.trajectory, n, N, report);
      Series s{"m = " + std::to_string(run.m), {}, {}};
      for (std::size_t k = 0; k < run.trajectory.times.size(); ++k) {
        s.x.push_back(run.trajectory.times[k]);
        s.y.push_back(run.trajectory.z[k][sweep.probe_entry]);
      }
      series.push_back(std::move(s));
    }
    out << "ordering " << (sweep.strictly_decreasing ? "strictly decreasing" : "NOT strictly decreasing")
        << " in m\n";
    report.metrics()["strictly_decreasing"] = sweep.strictly_decreasing;
    if (o.svg && !series.empty()) {
      PlotOptions po;
      po.title = "estimate of x_" + std::to_string(sweep.probe_entry + 1) + " by observer 1";
      po.y_label = "z^1";
      write_text(fs::path(dir) / "m_sweep.svg", render_line_plot(series, po), report);
    }
    report.save(dir);
    for (const auto& run : sweep.runs)
      if (!run.ok) return kExitUndecided;
    if (truncated) return kExitTruncated;
    return sweep.strictly_decreasing ? kExitOk : kExitFailure;
  }

  std::optional<synthesis::LMICertificate> cert;
  synthesis::ObserverGains gains;
  if (f.gains) {
    gains = *f.gains;
  } else {
    const auto s = synthesize(f, plant, g, f.synthesis->mu_star_grid);
    if (!s.result.certificate) {
      out << "undecided: " << s.result.message << '\n';
      return kExitUndecided;
    }
    cert = s.result.certificate;
    gains = synthesis::extract_gains(*cert);
    out << "synthesized gains at mu* = " << num(cert->mu_star) << '\n';
  }
  auto sc = scenario::build_simulation(f, plant, g, gains);
  if (cert) sc.extra_times.push_back(cert->t_star);
  auto tr = simulation::simulate(sc);
  if (cert) simulation::attach_certificate(tr, *cert, sc.schedule);

  const std::string dir = out_dir(o, &f);
  const double ratio = simulation::terminal_error_ratio(tr, N);
  out << "terminal error ratio max_i|e^i(t_end)| / max_i|e^i(t0)| = " << num(ratio) << " at t_end = "
      << num(tr.times.empty() ? sc.schedule.t0 : tr.times.back()) << '\n';
  report.metrics()["terminal_error_ratio"] = ratio;
  report.metrics()["accepted_steps"] = tr.accepted_steps;
  report.metrics()["truncated"] = tr.truncated;
  write_trajectory(fs::path(dir) / (tr.truncated ? "trajectory.partial.csv" : "trajectory.csv"), tr, n, N, report);
  if (o.svg) write_text(fs::path(dir) / "errors.svg", error_plot(tr, N, "observer error norms"), report);
  report.save(dir);
  if (tr.truncated) {
    out << "integration truncated: " << tr.diagnostic << '\n';
    return kExitTruncated;
  }
  return kExitOk;
}

int cmd_verify(const CommandOptions& o, std::ostream& out) {
  const ScenarioFile f = load(o);
  if (o.certificate_path.empty()) throw ValidationError("--certificate is required");
  const auto cert = scenario::load_certificate(o.certificate_path);
  const auto plant = scenario::build_plant(f);
  const auto g = graph::validate_digraph(f.adjacency);
  const double tol = f.synthesis ? f.synthesis->tolerance : 1e-7;
  const auto problem = synthesis::assemble_problem(plant, g, f.schedule, scenario::effective_kf(f), cert.mu_star);
  const auto rep = synthesis::verify_certificate(problem, cert, tol);
  Report report("verify");
  out << "tolerance " << num(tol) << '\n';
  print_checks(out, rep.checks);
  out << "  " << std::left << std::setw(22) << "eps1, eps2, eps3 > 0" << (rep.scalars_positive ? "pass" : "FAIL")
      << '\n';
  out << (rep.passed ? "certificate verified\n" : "certificate REJECTED\n");
  report.metrics()["margins"] = checks_json(rep.checks);
  report.metrics()["passed"] = rep.passed;
  report.save(out_dir(o, &f));
  return rep.passed ? kExitOk : kExitUndecided;
}

int cmd_reproduce_example(const CommandOptions& o, std::ostream& out) {
  AcceptanceOptions a;
  if (o.delta) a.delta = *o.delta;
  a.mu_star = o.mu_star;
  if (o.grid) a.grid = *o.grid;
  a.export_reference_gains = o.reference_gains;
  a.svg = o.svg;
  a.seed = seed_from_env(a.seed);
  // Validate overrides before anything runs or is written.
  gains::GainSchedule check;
  check.T = 2.0;
  check.delta = a.delta;
  check.validate();
  if (a.mu_star && !(*a.mu_star >= 1.0)) throw ValidationError("--mu-star must be >= 1");
  if (a.grid < 2) throw ValidationError("--grid must be at least 2");
  a.out_dir = out_dir(o, nullptr);

  Report report("reproduce-example");
  const auto rows = run_acceptance(a, out);
  bool ok = true;
  Json table = Json::array();
  for (const auto& row : rows) {
    out << format_row(row) << '\n';
    if (row.status == RowStatus::kFail) {
      ok = false;
      out << "stage failed: criterion " << row.id << " (" << row.title << ")\n";
    }
    table.push_back({{"id", row.id},
                     {"title", row.title},
                     {"status", row.status == RowStatus::kPass ? "pass" : row.status == RowStatus::kFail ? "fail" : "n/a"},
                     {"detail", row.detail}});
  }
  report.metrics()["acceptance"] = table;
  report.save(a.out_dir);
  return ok ? kExitOk : kExitFailure;
}

int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (name == "analyze-graph") return cmd_analyze_graph(options, out);
    if (name == "synthesize") return cmd_synthesize(options, out);
    if (name == "simulate") return cmd_simulate(options, out);
    if (name == "verify") return cmd_verify(options, out);
    if (name == "reproduce-example") return cmd_reproduce_example(options, out);
    err << "unknown command '" << name << "'\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

SweepResult run_m_sweep(const ScenarioFile& file, const std::vector<unsigned>& ms, std::optional<double> stop_time,
                        double probe_time, const std::vector<double>& mu_grid, bool resynthesize) {
  if (ms.empty()) throw ValidationError("m-sweep: empty list of m values");
  for (unsigned m : ms)
    if (m < 1) throw ValidationError("m-sweep: m must be >= 1");
  if (!file.x0) throw ValidationError("m-sweep: scenario has no 'initial' section");
  if (!resynthesize && !file.gains) throw ValidationError("m-sweep: no gains to reuse");
  const auto plant = scenario::build_plant(file);
  const auto g = graph::validate_digraph(file.adjacency);
  if (resynthesize) require_observable(plant);

  SweepResult result;
  result.probe_time = probe_time;
  result.probe_entry = plant.structure.state_dim() > 1 ? 1 : 0;

  auto one = [&](unsigned m) {
    SweepRun run;
    run.m = m;
    ScenarioFile f = file;
    f.schedule.m = m;
    if (stop_time) f.schedule.delta = 1.0 - (*stop_time - f.schedule.t0) / f.schedule.T;
    f.schedule.validate();
    synthesis::ObserverGains gains;
    if (resynthesize) {
      const auto s = synthesize(f, plant, g, mu_grid);
      if (!s.result.certificate) {
        run.message = "undecided: " + s.result.message;
        return run;
      }
      run.mu_star = s.result.certificate->mu_star;
      gains = synthesis::extract_gains(*s.result.certificate);
      run.message = "gains synthesized at mu* = " + num(run.mu_star);
    } else {
      gains = *f.gains;
      run.message = "scenario gains";
    }
    auto sc = scenario::build_simulation(f, plant, g, gains);
    sc.extra_times.push_back(probe_time);
    run.trajectory = simulation::simulate(sc);
    const auto& times = run.trajectory.times;
    const auto it = std::lower_bound(times.begin(), times.end(), probe_time);
    if (it == times.end()) {
      run.message += "; probe time not reached";
      return run;
    }
    run.probe = std::abs(run.trajectory.e[static_cast<std::size_t>(it - times.begin())][result.probe_entry]);
    run.ok = !run.trajectory.truncated;
    return run;
  };

  std::vector<unsigned> order(ms);
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  std::vector<std::future<SweepRun>> futures;
  for (unsigned m : order) futures.push_back(std::async(std::launch::async, one, m));
  for (auto& fu : futures) result.runs.push_back(fu.get());

  result.strictly_decreasing = true;
  for (std::size_t k = 0; k < result.runs.size(); ++k) {
    if (!result.runs[k].ok) result.strictly_decreasing = false;
    if (k > 0 && !(result.runs[k].probe < result.runs[k - 1].probe)) result.strictly_decreasing = false;
  }
  return result;
}

}  // namespace ptonet::tools
