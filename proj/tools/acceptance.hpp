#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ptonet::tools {

struct AcceptanceOptions {
  double delta = 0.005;
  std::optional<double> mu_star;  // default 100
  std::size_t grid = 2000;
  bool export_reference_gains = false;  // exported trajectory uses the reference gains
  std::string out_dir;                  // empty: nothing written
  bool svg = false;
  std::uint64_t seed = 20240601;
};

enum class RowStatus { kPass, kFail, kNotApplicable };

struct AcceptanceRow {
  int id = 0;
  std::string title;
  RowStatus status = RowStatus::kFail;
  std::string detail;
};

// Convergence threshold on the terminal error ratio: 1e-3 at the default stop
// margin, 1e-2 for any larger delta.
double convergence_threshold(double delta);

// Seed from PTONET_SEED when set, else `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

// Runs the ten acceptance criteria on the bundled four-agent example.
// Progress lines go to `log`.
std::vector<AcceptanceRow> run_acceptance(const AcceptanceOptions& options, std::ostream& log);

std::string format_row(const AcceptanceRow& row);

}  // namespace ptonet::tools
