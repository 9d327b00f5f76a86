#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ptonet/scenario.hpp"
#include "ptonet/simulation.hpp"

namespace ptonet::tools {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitUndecided = 3;
inline constexpr int kExitTruncated = 4;

struct CommandOptions {
  std::string scenario_path;
  std::string certificate_path;
  std::string out_dir = "ptonet_out";
  std::vector<unsigned> m_sweep;
  std::optional<double> delta;
  std::optional<double> mu_star;
  std::optional<std::size_t> grid;
  bool svg = false;
  bool reference_gains = false;
};

int cmd_analyze_graph(const CommandOptions& options, std::ostream& out);
int cmd_synthesize(const CommandOptions& options, std::ostream& out);
int cmd_simulate(const CommandOptions& options, std::ostream& out);
int cmd_verify(const CommandOptions& options, std::ostream& out);
int cmd_reproduce_example(const CommandOptions& options, std::ostream& out);

// Dispatches by name and maps library errors onto exit codes; the message
// goes to `err`.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err);

struct SweepRun {
  unsigned m = 1;
  double mu_star = 0.0;  // 0 when the scenario's gains were reused
  bool ok = false;
  std::string message;
  simulation::Trajectory trajectory;
  double probe = 0.0;  // |e^1 at the probed entry| at the probe time
};

struct SweepResult {
  std::vector<SweepRun> runs;
  double probe_time = 0.0;
  std::size_t probe_entry = 0;  // 0-based state index of the probed error entry
  bool strictly_decreasing = false;
};

// Simulates the scenario once per m. With `resynthesize`, gains come from
// solving the design inequalities over `mu_grid` for that m; otherwise the
// scenario's gains are reused. Runs execute concurrently. The probe is the
// second entry of observer 1's error (the first when n = 1). Runs are
// ordered by ascending m.
SweepResult run_m_sweep(const scenario::ScenarioFile& file, const std::vector<unsigned>& ms,
                        std::optional<double> stop_time, double probe_time, const std::vector<double>& mu_grid,
                        bool resynthesize);

}  // namespace ptonet::tools
