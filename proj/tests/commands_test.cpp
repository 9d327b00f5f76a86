#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "acceptance.hpp"
#include "commands.hpp"

namespace ptonet::tools {
namespace {

namespace fs = std::filesystem;

const char* kLinearScenario = R"({
  "structure": {"block_sizes": [2, 1]},
  "nonlinearity": {"expressions": ["0", "0"], "gammas": [0, 0]},
  "graph": {"adjacency": [[0, 1], [1, 0]]},
  "schedule": {"T": 1, "m": 1, "delta": 0.05},
  "synthesis": {"mu_star": 1},
  "initial": {"x0": [1, -1, 0.5]},
  "output": {"grid": 50}
})";

class CommandsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ptonet_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  int run(const std::string& command, CommandOptions o) {
    if (o.out_dir == CommandOptions{}.out_dir) o.out_dir = (dir_ / "out").string();
    out_.str("");
    err_.str("");
    return run_command(command, o, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CommandsTest, AnalyzeGraph) {
  CommandOptions o;
  o.scenario_path = write("s.json", kLinearScenario);
  EXPECT_EQ(run("analyze-graph", o), kExitOk);
  EXPECT_NE(out_.str().find("strongly connected: yes"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "analyze-graph_report.json"));
}

TEST_F(CommandsTest, DisconnectedGraphIsValidationError) {
  std::string text = kLinearScenario;
  text.replace(text.find("[[0, 1], [1, 0]]"), 16, "[[0, 1], [0, 0]]");
  CommandOptions o;
  o.scenario_path = write("s.json", text);
  EXPECT_EQ(run("analyze-graph", o), kExitValidation);
  EXPECT_NE(err_.str().find("strongly connected"), std::string::npos);
}

TEST_F(CommandsTest, MissingOrMalformedInputs) {
  CommandOptions o;
  o.scenario_path = (dir_ / "missing.json").string();
  EXPECT_EQ(run("synthesize", o), kExitValidation);
  o.scenario_path = write("bad.json", "{");
  EXPECT_EQ(run("simulate", o), kExitValidation);
  o.scenario_path = write("s.json", kLinearScenario);
  o.delta = 1.5;
  EXPECT_EQ(run("simulate", o), kExitValidation);
  EXPECT_EQ(run("no-such-command", CommandOptions{}), kExitValidation);
}

TEST_F(CommandsTest, SynthesizeVerifySimulate) {
  CommandOptions o;
  o.scenario_path = write("s.json", kLinearScenario);
  ASSERT_EQ(run("synthesize", o), kExitOk) << out_.str() << err_.str();
  const auto cert_path = dir_ / "out" / "certificate.json";
  ASSERT_TRUE(fs::exists(cert_path));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "gains.json"));

  o.certificate_path = cert_path.string();
  EXPECT_EQ(run("verify", o), kExitOk) << out_.str();

  auto doc = scenario::Json::parse(std::ifstream(cert_path));
  doc["eps1"] = -1.0;
  o.certificate_path = write("tampered.json", doc.dump());
  EXPECT_EQ(run("verify", o), kExitUndecided);
  EXPECT_NE(out_.str().find("REJECTED"), std::string::npos);

  o.certificate_path.clear();
  EXPECT_EQ(run("simulate", o), kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "out" / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "simulate_report.json"));
}

TEST_F(CommandsTest, HugeKfIsUndecided) {
  std::string text = kLinearScenario;
  text.replace(text.find("\"mu_star\": 1"), 12, "\"mu_star\": 1, \"kf\": 1e9");
  CommandOptions o;
  o.scenario_path = write("s.json", text);
  EXPECT_EQ(run("synthesize", o), kExitUndecided);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "certificate.json"));
}

TEST_F(CommandsTest, TruncatedRunWritesPartialCsv) {
  std::string text = kLinearScenario;
  text.replace(text.find("\"expressions\": [\"0\", \"0\"]"), 25, "\"expressions\": [\"0\", \"x2_1^3\"]");
  text.replace(text.find("\"gammas\": [0, 0]"), 16, "\"gammas\": [0, 1]");
  text.replace(text.find("\"synthesis\": {\"mu_star\": 1}"), 27,
               "\"gains\": {\"L\": [[1, 1, 0], [0, 0, 1]]}");
  text.replace(text.find("[1, -1, 0.5]"), 12, "[1, -1, 5]");
  CommandOptions o;
  o.scenario_path = write("s.json", text);
  EXPECT_EQ(run("simulate", o), kExitTruncated) << out_.str() << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "out" / "trajectory.partial.csv"));
}

TEST(Acceptance, SeedFromEnvironment) {
  ::unsetenv("PTONET_SEED");
  EXPECT_EQ(seed_from_env(7), 7u);
  ::setenv("PTONET_SEED", "12345", 1);
  EXPECT_EQ(seed_from_env(7), 12345u);
  ::unsetenv("PTONET_SEED");
}

TEST(Acceptance, ThresholdAndFormatting) {
  EXPECT_DOUBLE_EQ(convergence_threshold(0.005), 1e-3);
  EXPECT_DOUBLE_EQ(convergence_threshold(0.05), 1e-2);
  AcceptanceRow r{4, "title", RowStatus::kPass, "ok"};
  EXPECT_EQ(format_row(r).rfind("[PASS]", 0), 0u);
  r.status = RowStatus::kFail;
  EXPECT_EQ(format_row(r).rfind("[FAIL]", 0), 0u);
}

TEST(Sweep, LinearMSweepDecreasesAtProbe) {
  auto f = scenario::parse_scenario_text(kLinearScenario);
  const auto res = run_m_sweep(f, {3, 1, 2}, 0.9, 0.75, {1.0, 2.0}, true);
  ASSERT_EQ(res.runs.size(), 3u);
  EXPECT_EQ(res.runs[0].m, 1u);
  EXPECT_EQ(res.runs[2].m, 3u);
  for (const auto& run : res.runs) EXPECT_TRUE(run.ok) << run.message;
  EXPECT_EQ(res.probe_entry, 1u);
}

}  // namespace
}  // namespace ptonet::tools
