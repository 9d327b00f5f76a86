#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ptonet/gains.hpp"
#include "ptonet/graph.hpp"
#include "ptonet/plant.hpp"
#include "ptonet/simulation.hpp"
#include "ptonet/synthesis.hpp"

namespace ptonet::scenario {

using Json = nlohmann::json;
using numerics::DenseMatrix;
using numerics::Vector;

struct SynthesisSection {
  std::vector<double> mu_star_grid;  // a single mu_star is a one-element grid
  double tolerance = 1e-7;
  double q_norm_bound = 2.0;
  std::size_t max_iterations = 3000;
  std::optional<double> kf_override;
};

struct OutputSection {
  std::size_t grid = 2000;
  std::string directory;  // empty: the command's --out or "."
};

// In-memory form of a scenario file. Every field has been schema-checked.
struct ScenarioFile {
  std::vector<std::size_t> block_sizes;
  std::vector<std::string> expressions;
  Vector gammas;
  std::vector<plant::Interval> validity_box;
  DenseMatrix adjacency;
  gains::GainSchedule schedule;
  std::optional<SynthesisSection> synthesis;
  std::optional<synthesis::ObserverGains> gains;
  std::optional<Vector> x0;
  std::optional<std::vector<Vector>> z0;
  simulation::IntegratorOptions integrator;
  OutputSection output;
};

// Throws ValidationError naming the offending JSON path. Unknown keys are
// rejected; `structure`, `nonlinearity` and `graph` are required.
ScenarioFile parse_scenario(const Json& doc);
ScenarioFile parse_scenario_text(std::string_view text);
ScenarioFile load_scenario(const std::string& path);
Json scenario_to_json(const ScenarioFile& file);

plant::PlantModel build_plant(const ScenarioFile& file);
// k_f from the gammas unless the synthesis section overrides it.
double effective_kf(const ScenarioFile& file);

// Requires `initial`. Uses `gains` as given.
simulation::Scenario build_simulation(const ScenarioFile& file, const plant::PlantModel& plant,
                                      const graph::ValidatedDigraph& graph,
                                      const synthesis::ObserverGains& gains);

Json certificate_to_json(const synthesis::LMICertificate& cert);
// Throws ValidationError on schema or shape errors.
synthesis::LMICertificate certificate_from_json(const Json& doc);
synthesis::LMICertificate load_certificate(const std::string& path);

Json gains_to_json(const synthesis::ObserverGains& gains);

// The four-agent example: blocks (2,1,2,1), T = 2, m = 2, mu* = 100.
std::string_view example_scenario_text();
// The example with its reference gains in the `gains` section.
ScenarioFile example_scenario(bool with_reference_gains);
synthesis::ObserverGains reference_gains();

}  // namespace ptonet::scenario
