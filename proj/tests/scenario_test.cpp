#include <gtest/gtest.h>

#include <cmath>

#include "ptonet/error.hpp"
#include "ptonet/scenario.hpp"

namespace ptonet::scenario {
namespace {

std::string message_of(std::string_view text) {
  try {
    parse_scenario_text(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

TEST(Scenario, ExampleParses) {
  const auto f = example_scenario(false);
  EXPECT_EQ(f.block_sizes, (std::vector<std::size_t>{2, 1, 2, 1}));
  EXPECT_EQ(f.expressions.size(), 4u);
  EXPECT_DOUBLE_EQ(f.schedule.T, 2.0);
  EXPECT_EQ(f.schedule.m, 2u);
  ASSERT_TRUE(f.synthesis.has_value());
  EXPECT_EQ(f.synthesis->mu_star_grid, (std::vector<double>{100.0}));
  ASSERT_TRUE(f.x0.has_value());
  EXPECT_EQ(f.x0->size(), 6u);
  ASSERT_TRUE(f.z0.has_value());
  EXPECT_EQ(f.z0->size(), 4u);
  EXPECT_FALSE(f.gains.has_value());
  ASSERT_EQ(f.validity_box.size(), 6u);
  EXPECT_DOUBLE_EQ(f.validity_box[0].second, 1.18);
  EXPECT_TRUE(std::isinf(f.validity_box[5].first));
  EXPECT_NEAR(effective_kf(f), std::sqrt(688.0), 1e-12);
}

TEST(Scenario, ReferenceGains) {
  const auto g = reference_gains();
  ASSERT_EQ(g.L.size(), 4u);
  EXPECT_DOUBLE_EQ(g.L[0][0], 5.8117);
  EXPECT_DOUBLE_EQ(g.L[0][1], 7.7697);
  EXPECT_DOUBLE_EQ(g.L[1][2], 1.3578);
  EXPECT_DOUBLE_EQ(g.L[2][3], 8.7002);
  EXPECT_DOUBLE_EQ(g.L[2][4], 9.3939);
  EXPECT_DOUBLE_EQ(g.L[3][5], 1.1797);
  EXPECT_EQ(g.L[3][0], 0.0);
}

TEST(Scenario, JsonRoundTrip) {
  const auto f = example_scenario(true);
  const auto back = parse_scenario(scenario_to_json(f));
  EXPECT_EQ(back.block_sizes, f.block_sizes);
  EXPECT_EQ(back.expressions, f.expressions);
  EXPECT_EQ(back.gammas, f.gammas);
  EXPECT_EQ(back.adjacency, f.adjacency);
  EXPECT_EQ(back.gains->L, f.gains->L);
  EXPECT_EQ(*back.x0, *f.x0);
  EXPECT_EQ(back.validity_box.size(), f.validity_box.size());
  EXPECT_TRUE(std::isinf(back.validity_box[3].second));
}

TEST(Scenario, RejectsUnknownKeysWithPath) {
  auto doc = scenario_to_json(example_scenario(false));
  doc["schedule"]["tau"] = 1.0;
  try {
    parse_scenario(doc);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("schedule"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("tau"), std::string::npos);
  }
}

TEST(Scenario, RequiredSectionsAndTypes) {
  EXPECT_NE(message_of(R"({"structure": {"block_sizes": [1]}, "graph": {"adjacency": [[0]]}})").find("nonlinearity"),
            std::string::npos);
  EXPECT_FALSE(message_of("{not json").empty());
  EXPECT_FALSE(message_of("[]").empty());
  auto doc = scenario_to_json(example_scenario(false));
  doc["synthesis"]["mu_star_grid"] = {100, 200};
  EXPECT_THROW(parse_scenario(doc), ValidationError);
  doc = scenario_to_json(example_scenario(false));
  doc["schedule"]["m"] = 1.5;
  EXPECT_THROW(parse_scenario(doc), ValidationError);
  doc = scenario_to_json(example_scenario(false));
  doc["structure"]["block_sizes"] = {2, 1};
  EXPECT_THROW(build_plant(parse_scenario(doc)), ValidationError);
}

TEST(Scenario, KfOverride) {
  auto doc = scenario_to_json(example_scenario(false));
  doc["synthesis"]["kf"] = 3.0;
  EXPECT_DOUBLE_EQ(effective_kf(parse_scenario(doc)), 3.0);
}

TEST(Scenario, BuildSimulationNeedsInitialState) {
  auto f = example_scenario(true);
  const auto plant = build_plant(f);
  const auto g = graph::validate_digraph(f.adjacency);
  const auto sc = build_simulation(f, plant, g, *f.gains);
  EXPECT_EQ(sc.z0.size(), 4u);
  EXPECT_EQ(sc.grid_points, 2000u);
  f.x0.reset();
  EXPECT_THROW(build_simulation(f, plant, g, *f.gains), ValidationError);
}

synthesis::LMICertificate tiny_certificate() {
  synthesis::LMICertificate c;
  c.p_blocks = {DenseMatrix{{2, 0.5}, {0.5, 1}}};
  c.q_rows = {{0.1, -0.2}};
  c.eps1 = 0.01;
  c.eps2 = 0.3;
  c.eps3 = 1.0;
  c.mu_star = 100.0;
  c.t_star = 1.98;
  return c;
}

TEST(Certificate, JsonRoundTripIsExact) {
  const auto c = tiny_certificate();
  const auto back = certificate_from_json(Json::parse(certificate_to_json(c).dump()));
  EXPECT_EQ(back.p_blocks[0], c.p_blocks[0]);
  EXPECT_EQ(back.q_rows[0], c.q_rows[0]);
  EXPECT_EQ(back.eps1, c.eps1);
  EXPECT_EQ(back.eps2, c.eps2);
  EXPECT_EQ(back.mu_star, c.mu_star);
  EXPECT_EQ(back.t_star, c.t_star);
}

TEST(Certificate, RejectsBadShapes) {
  auto doc = certificate_to_json(tiny_certificate());
  doc["Q_rows"] = {{1.0, 2.0, 3.0}};
  EXPECT_THROW(certificate_from_json(doc), ValidationError);
  doc = certificate_to_json(tiny_certificate());
  doc.erase("eps2");
  EXPECT_THROW(certificate_from_json(doc), ValidationError);
  doc = certificate_to_json(tiny_certificate());
  doc["P_blocks"][0][0][1] = 7.0;
  EXPECT_THROW(certificate_from_json(doc), ValidationError);
  EXPECT_THROW(load_certificate("/nonexistent/certificate.json"), ValidationError);
}

}  // namespace
}  // namespace ptonet::scenario
