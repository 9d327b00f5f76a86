#include "ptonet/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ptonet/error.hpp"

namespace ptonet::scenario {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("scenario " + path + ": " + what);
}

void only_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!keys.count(k)) fail(path, "unknown key '" + k + "'");
  }
}

const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) fail(path, std::string("missing '") + key + "'");
  return obj.at(key);
}

double number(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "must be finite");
  return d;
}

std::size_t count(const Json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(path, "must be a nonnegative integer");
  return v.get<std::size_t>();
}

Vector numbers(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "must be an array of numbers");
  Vector out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<Vector> rows(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "must be an array of arrays");
  std::vector<Vector> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(numbers(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

DenseMatrix matrix(const Json& v, const std::string& path) {
  const auto r = rows(v, path);
  if (r.empty()) fail(path, "must not be empty");
  DenseMatrix m(r.size(), r.front().size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i].size() != m.cols()) fail(path, "rows must have equal length");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = r[i][j];
  }
  return m;
}

Json matrix_json(const DenseMatrix& m) {
  Json out = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(m.row_vector(i));
  return out;
}

double bound_value(const Json& v, const std::string& path, double if_null) {
  if (v.is_null()) return if_null;
  return number(v, path);
}

}  // namespace

ScenarioFile parse_scenario(const Json& doc) {
  only_keys(doc, "root", {"structure", "nonlinearity", "graph", "schedule", "synthesis", "gains", "initial",
                          "integrator", "output"});
  ScenarioFile f;

  const Json& st = require(doc, "structure", "root");
  only_keys(st, "structure", {"block_sizes"});
  const Json& bs = require(st, "block_sizes", "structure");
  if (!bs.is_array() || bs.empty()) fail("structure.block_sizes", "must be a non-empty array");
  for (std::size_t k = 0; k < bs.size(); ++k) {
    const std::size_t b = count(bs[k], "structure.block_sizes[" + std::to_string(k) + "]");
    if (b == 0) fail("structure.block_sizes[" + std::to_string(k) + "]", "must be positive");
    f.block_sizes.push_back(b);
  }
  std::size_t n = 0;
  for (std::size_t b : f.block_sizes) n += b;
  const std::size_t N = f.block_sizes.size();

  const Json& nl = require(doc, "nonlinearity", "root");
  only_keys(nl, "nonlinearity", {"expressions", "gammas", "validity_box"});
  const Json& ex = require(nl, "expressions", "nonlinearity");
  if (!ex.is_array()) fail("nonlinearity.expressions", "must be an array of strings");
  for (std::size_t k = 0; k < ex.size(); ++k) {
    if (!ex[k].is_string()) fail("nonlinearity.expressions[" + std::to_string(k) + "]", "must be a string");
    f.expressions.push_back(ex[k].get<std::string>());
  }
  if (f.expressions.size() != N) fail("nonlinearity.expressions", "needs one expression per block");
  f.gammas = numbers(require(nl, "gammas", "nonlinearity"), "nonlinearity.gammas");
  if (f.gammas.size() != N) fail("nonlinearity.gammas", "needs one constant per block");
  for (double g : f.gammas)
    if (g < 0.0) fail("nonlinearity.gammas", "must be nonnegative");
  if (nl.contains("validity_box")) {
    const Json& vb = nl.at("validity_box");
    if (!vb.is_array() || vb.size() != n) fail("nonlinearity.validity_box", "needs one [lo, hi] per state");
    for (std::size_t k = 0; k < n; ++k) {
      const std::string p = "nonlinearity.validity_box[" + std::to_string(k) + "]";
      if (!vb[k].is_array() || vb[k].size() != 2) fail(p, "must be [lo, hi] (null for unbounded)");
      const double lo = bound_value(vb[k][0], p, -kInf), hi = bound_value(vb[k][1], p, kInf);
      if (!(lo <= hi)) fail(p, "needs lo <= hi");
      f.validity_box.emplace_back(lo, hi);
    }
  }

  const Json& gr = require(doc, "graph", "root");
  only_keys(gr, "graph", {"adjacency"});
  f.adjacency = matrix(require(gr, "adjacency", "graph"), "graph.adjacency");
  if (f.adjacency.rows() != N || f.adjacency.cols() != N) {
    fail("graph.adjacency", "must be " + std::to_string(N) + " x " + std::to_string(N));
  }

  if (doc.contains("schedule")) {
    const Json& s = doc.at("schedule");
    only_keys(s, "schedule", {"t0", "T", "m", "delta", "mu_cap"});
    if (s.contains("t0")) f.schedule.t0 = number(s.at("t0"), "schedule.t0");
    if (s.contains("T")) f.schedule.T = number(s.at("T"), "schedule.T");
    if (s.contains("m")) {
      const std::size_t m = count(s.at("m"), "schedule.m");
      if (m < 1 || m > 64) fail("schedule.m", "must be an integer in [1, 64]");
      f.schedule.m = static_cast<unsigned>(m);
    }
    if (s.contains("delta")) f.schedule.delta = number(s.at("delta"), "schedule.delta");
    if (s.contains("mu_cap")) f.schedule.mu_cap = number(s.at("mu_cap"), "schedule.mu_cap");
  }
  f.schedule.validate();

  if (doc.contains("synthesis")) {
    const Json& s = doc.at("synthesis");
    only_keys(s, "synthesis", {"mu_star", "mu_star_grid", "tolerance", "q_norm_bound", "max_iterations", "kf"});
    SynthesisSection sec;
    if (s.contains("mu_star") == s.contains("mu_star_grid")) {
      fail("synthesis", "give exactly one of 'mu_star' and 'mu_star_grid'");
    }
    if (s.contains("mu_star")) sec.mu_star_grid = {number(s.at("mu_star"), "synthesis.mu_star")};
    else sec.mu_star_grid = numbers(s.at("mu_star_grid"), "synthesis.mu_star_grid");
    if (sec.mu_star_grid.empty()) fail("synthesis.mu_star_grid", "must not be empty");
    for (double v : sec.mu_star_grid)
      if (v < 1.0) fail("synthesis.mu_star", "values must be >= 1");
    if (s.contains("tolerance")) sec.tolerance = number(s.at("tolerance"), "synthesis.tolerance");
    if (!(sec.tolerance > 0.0)) fail("synthesis.tolerance", "must be positive");
    if (s.contains("q_norm_bound")) sec.q_norm_bound = number(s.at("q_norm_bound"), "synthesis.q_norm_bound");
    if (s.contains("max_iterations")) sec.max_iterations = count(s.at("max_iterations"), "synthesis.max_iterations");
    if (sec.max_iterations == 0) fail("synthesis.max_iterations", "must be positive");
    if (s.contains("kf")) {
      sec.kf_override = number(s.at("kf"), "synthesis.kf");
      if (*sec.kf_override < 0.0) fail("synthesis.kf", "must be nonnegative");
    }
    f.synthesis = sec;
  }

  if (doc.contains("gains")) {
    const Json& g = doc.at("gains");
    only_keys(g, "gains", {"L"});
    synthesis::ObserverGains gains;
    gains.L = rows(require(g, "L", "gains"), "gains.L");
    if (gains.L.size() != N) fail("gains.L", "needs one gain vector per observer");
    for (const auto& L : gains.L)
      if (L.size() != n) fail("gains.L", "each gain vector must have length " + std::to_string(n));
    f.gains = gains;
  }

  if (doc.contains("initial")) {
    const Json& s = doc.at("initial");
    only_keys(s, "initial", {"x0", "z0"});
    f.x0 = numbers(require(s, "x0", "initial"), "initial.x0");
    if (f.x0->size() != n) fail("initial.x0", "must have length " + std::to_string(n));
    if (s.contains("z0")) {
      f.z0 = rows(s.at("z0"), "initial.z0");
      if (f.z0->size() != N) fail("initial.z0", "needs one vector per observer");
      for (const auto& z : *f.z0)
        if (z.size() != n) fail("initial.z0", "each vector must have length " + std::to_string(n));
    } else {
      f.z0 = std::vector<Vector>(N, Vector(n, 0.0));
    }
  }

  if (doc.contains("integrator")) {
    const Json& s = doc.at("integrator");
    only_keys(s, "integrator", {"rel_tol", "abs_tol", "max_step", "initial_step", "step_floor"});
    auto& o = f.integrator;
    if (s.contains("rel_tol")) o.rel_tol = number(s.at("rel_tol"), "integrator.rel_tol");
    if (s.contains("abs_tol")) o.abs_tol = number(s.at("abs_tol"), "integrator.abs_tol");
    if (s.contains("max_step")) o.max_step = number(s.at("max_step"), "integrator.max_step");
    if (s.contains("initial_step")) o.initial_step = number(s.at("initial_step"), "integrator.initial_step");
    if (s.contains("step_floor")) o.step_floor = number(s.at("step_floor"), "integrator.step_floor");
  }
  f.integrator.validate();

  if (doc.contains("output")) {
    const Json& s = doc.at("output");
    only_keys(s, "output", {"grid", "directory"});
    if (s.contains("grid")) f.output.grid = count(s.at("grid"), "output.grid");
    if (f.output.grid < 2) fail("output.grid", "must be at least 2");
    if (s.contains("directory")) {
      if (!s.at("directory").is_string()) fail("output.directory", "must be a string");
      f.output.directory = s.at("directory").get<std::string>();
    }
  }
  return f;
}

ScenarioFile parse_scenario_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ScenarioFile load_scenario(const std::string& path) { return parse_scenario_text(read_file(path)); }

Json scenario_to_json(const ScenarioFile& f) {
  Json doc;
  doc["structure"]["block_sizes"] = f.block_sizes;
  doc["nonlinearity"]["expressions"] = f.expressions;
  doc["nonlinearity"]["gammas"] = f.gammas;
  if (!f.validity_box.empty()) {
    Json vb = Json::array();
    for (const auto& [lo, hi] : f.validity_box) {
      vb.push_back({std::isfinite(lo) ? Json(lo) : Json(nullptr), std::isfinite(hi) ? Json(hi) : Json(nullptr)});
    }
    doc["nonlinearity"]["validity_box"] = vb;
  }
  doc["graph"]["adjacency"] = matrix_json(f.adjacency);
  doc["schedule"] = {{"t0", f.schedule.t0}, {"T", f.schedule.T}, {"m", f.schedule.m},
                     {"delta", f.schedule.delta}, {"mu_cap", f.schedule.mu_cap}};
  if (f.synthesis) {
    Json s;
    if (f.synthesis->mu_star_grid.size() == 1) s["mu_star"] = f.synthesis->mu_star_grid.front();
    else s["mu_star_grid"] = f.synthesis->mu_star_grid;
    s["tolerance"] = f.synthesis->tolerance;
    s["q_norm_bound"] = f.synthesis->q_norm_bound;
    s["max_iterations"] = f.synthesis->max_iterations;
    if (f.synthesis->kf_override) s["kf"] = *f.synthesis->kf_override;
    doc["synthesis"] = s;
  }
  if (f.gains) doc["gains"] = gains_to_json(*f.gains);
  if (f.x0) {
    doc["initial"]["x0"] = *f.x0;
    if (f.z0) doc["initial"]["z0"] = *f.z0;
  }
  const auto& o = f.integrator;
  doc["integrator"] = {{"rel_tol", o.rel_tol}, {"abs_tol", o.abs_tol}, {"max_step", o.max_step},
                       {"initial_step", o.initial_step}, {"step_floor", o.step_floor}};
  doc["output"]["grid"] = f.output.grid;
  if (!f.output.directory.empty()) doc["output"]["directory"] = f.output.directory;
  return doc;
}

plant::PlantModel build_plant(const ScenarioFile& f) {
  plant::CanonicalStructure structure(f.block_sizes);
  auto program = plant::parse_nonlinearity(f.expressions, structure, f.gammas);
  program.validity_box = f.validity_box;
  return plant::make_plant(std::move(structure), std::move(program));
}

double effective_kf(const ScenarioFile& f) {
  if (f.synthesis && f.synthesis->kf_override) return *f.synthesis->kf_override;
  return plant::compute_kf(plant::CanonicalStructure(f.block_sizes), f.gammas);
}

simulation::Scenario build_simulation(const ScenarioFile& f, const plant::PlantModel& plant,
                                      const graph::ValidatedDigraph& graph,
                                      const synthesis::ObserverGains& gains) {
  if (!f.x0) throw ValidationError("scenario: the 'initial' section is required to simulate");
  simulation::Scenario s;
  s.plant = plant;
  s.graph = graph;
  s.schedule = f.schedule;
  s.gains = gains;
  s.x0 = *f.x0;
  s.z0 = *f.z0;
  s.integrator = f.integrator;
  s.grid_points = f.output.grid;
  s.validate();
  return s;
}

Json certificate_to_json(const synthesis::LMICertificate& cert) {
  Json doc;
  Json blocks = Json::array();
  for (const auto& P : cert.p_blocks) blocks.push_back(matrix_json(P));
  doc["P_blocks"] = blocks;
  doc["Q_rows"] = cert.q_rows;
  doc["eps1"] = cert.eps1;
  doc["eps2"] = cert.eps2;
  doc["eps3"] = cert.eps3;
  doc["mu_star"] = cert.mu_star;
  doc["t_star"] = cert.t_star;
  return doc;
}

synthesis::LMICertificate certificate_from_json(const Json& doc) {
  auto bad = [](const std::string& path, const std::string& what) {
    throw ValidationError("certificate " + path + ": " + what);
  };
  if (!doc.is_object()) bad("root", "must be an object");
  const std::set<std::string> keys{"P_blocks", "Q_rows", "eps1", "eps2", "eps3", "mu_star", "t_star"};
  for (const auto& [k, v] : doc.items())
    if (!keys.count(k)) bad("root", "unknown key '" + k + "'");
  for (const auto& k : keys)
    if (!doc.contains(k)) bad("root", "missing '" + k + "'");
  synthesis::LMICertificate cert;
  try {
    const Json& pb = doc.at("P_blocks");
    if (!pb.is_array() || pb.empty()) bad("P_blocks", "must be a non-empty array of matrices");
    for (std::size_t i = 0; i < pb.size(); ++i) cert.p_blocks.push_back(matrix(pb[i], "P_blocks"));
    cert.q_rows = rows(doc.at("Q_rows"), "Q_rows");
    cert.eps1 = number(doc.at("eps1"), "eps1");
    cert.eps2 = number(doc.at("eps2"), "eps2");
    cert.eps3 = number(doc.at("eps3"), "eps3");
    cert.mu_star = number(doc.at("mu_star"), "mu_star");
    cert.t_star = number(doc.at("t_star"), "t_star");
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("certificate: ") + e.what());
  }
  if (cert.q_rows.size() != cert.p_blocks.size()) bad("Q_rows", "needs one row per P block");
  for (std::size_t i = 0; i < cert.p_blocks.size(); ++i) {
    const auto& P = cert.p_blocks[i];
    if (!P.square() || P.rows() != cert.p_blocks.front().rows()) bad("P_blocks", "blocks must be equal square sizes");
    if (cert.q_rows[i].size() != P.rows()) bad("Q_rows", "rows must match the block size");
    if (numerics::asymmetry(P) > 1e-12) bad("P_blocks", "block " + std::to_string(i + 1) + " is not symmetric");
  }
  return cert;
}

synthesis::LMICertificate load_certificate(const std::string& path) {
  const std::string text = read_file(path);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("certificate is not valid JSON: ") + e.what());
  }
  return certificate_from_json(doc);
}

Json gains_to_json(const synthesis::ObserverGains& gains) { return Json{{"L", gains.L}}; }

std::string_view example_scenario_text() {
  return R"json({
  "structure": {"block_sizes": [2, 1, 2, 1]},
  "nonlinearity": {
    "expressions": [
      "-x1_1 + x1_2*(1 - x1_1^2)",
      "-x2_1 - cos(x1_1)",
      "-2*x3_1 + sin(x1_2) + x2_1",
      "-x4_1/(1 + x4_1^2) + x3_1"
    ],
    "gammas": [6, 1.4142135623730951, 2.449489742783178, 1.4142135623730951],
    "validity_box": [[-1.18, 1.18], [-2.08, 2.08], [null, null], [null, null], [null, null], [null, null]]
  },
  "graph": {"adjacency": [[0, 1, 0, 1], [0, 0, 1, 0], [1, 1, 0, 0], [1, 0, 0, 0]]},
  "schedule": {"t0": 0, "T": 2, "m": 2, "delta": 0.005},
  "synthesis": {"mu_star": 100},
  "initial": {
    "x0": [1, 0, -1, 0, 0, -2],
    "z0": [[0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0]]
  },
  "output": {"grid": 2000}
}
)json";
}

synthesis::ObserverGains reference_gains() {
  synthesis::ObserverGains g;
  g.L = {{5.8117, 7.7697, 0, 0, 0, 0},
         {0, 0, 1.3578, 0, 0, 0},
         {0, 0, 0, 8.7002, 9.3939, 0},
         {0, 0, 0, 0, 0, 1.1797}};
  return g;
}

ScenarioFile example_scenario(bool with_reference_gains) {
  ScenarioFile f = parse_scenario_text(example_scenario_text());
  if (with_reference_gains) f.gains = reference_gains();
  return f;
}

}  // namespace ptonet::scenario
