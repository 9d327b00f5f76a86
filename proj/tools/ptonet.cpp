#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

std::vector<unsigned> parse_m_list(const std::string& text) {
  std::vector<unsigned> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const unsigned long v = std::stoul(item, &used);
    if (used != item.size() || v < 1 || v > 64) throw std::invalid_argument(item);
    out.push_back(static_cast<unsigned>(v));
  }
  if (out.empty()) throw std::invalid_argument(text);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using ptonet::tools::CommandOptions;
  CLI::App app{"Prescribed-time distributed observer design and simulation"};
  app.require_subcommand(1);

  CommandOptions o;
  std::string m_sweep;
  double delta = 0.0, mu_star = 0.0;
  std::size_t grid = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--delta", delta, "stop margin as a fraction of T");
    sub->add_option("--mu-star", mu_star, "fix mu* instead of the scenario's value");
    sub->add_option("--grid", grid, "output grid points");
  };

  auto* analyze = app.add_subcommand("analyze-graph", "check the communication graph");
  analyze->add_option("--scenario", o.scenario_path, "scenario JSON")->required();
  common(analyze);

  auto* synth = app.add_subcommand("synthesize", "solve the design inequalities and write gains");
  synth->add_option("--scenario", o.scenario_path, "scenario JSON")->required();
  common(synth);

  auto* sim = app.add_subcommand("simulate", "co-simulate plant and observers");
  sim->add_option("--scenario", o.scenario_path, "scenario JSON")->required();
  sim->add_option("--m-sweep", m_sweep, "comma-separated m values, e.g. 1,2,3");
  sim->add_flag("--svg", o.svg, "also write SVG plots");
  common(sim);

  auto* verify = app.add_subcommand("verify", "check a certificate against a scenario");
  verify->add_option("--scenario", o.scenario_path, "scenario JSON")->required();
  verify->add_option("--certificate", o.certificate_path, "certificate JSON")->required();
  common(verify);

  auto* repro = app.add_subcommand("reproduce-example", "run the bundled four-agent example end to end");
  repro->add_flag("--reference-gains", o.reference_gains, "export the trajectory with the reference gains");
  repro->add_flag("--svg", o.svg, "also write SVG plots");
  common(repro);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ptonet::tools::kExitValidation;
  }

  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--delta")) o.delta = delta;
    if (sub->count("--mu-star")) o.mu_star = mu_star;
    if (sub->count("--grid")) o.grid = grid;
    if (sub->get_name() == "simulate" && sub->count("--m-sweep")) {
      try {
        o.m_sweep = parse_m_list(m_sweep);
      } catch (const std::exception&) {
        std::cerr << "validation error: --m-sweep expects integers in [1, 64] such as 1,2,3\n";
        return ptonet::tools::kExitValidation;
      }
    }
    return ptonet::tools::run_command(sub->get_name(), o, std::cout, std::cerr);
  }
  return ptonet::tools::kExitValidation;
}
