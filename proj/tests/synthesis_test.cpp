#include <gtest/gtest.h>

#include "ptonet/error.hpp"
#include "ptonet/synthesis.hpp"

namespace ptonet::synthesis {
namespace {

struct Fixture {
  plant::PlantModel plant;
  graph::ValidatedDigraph graph;
  gains::GainSchedule schedule;
};

// Two agents, blocks (2, 1), zero nonlinearity.
Fixture linear_fixture() {
  const plant::CanonicalStructure st({2, 1});
  Fixture f;
  f.plant = plant::make_plant(st, plant::parse_nonlinearity("0\n0", st, {0.0, 0.0}));
  f.graph = graph::validate_digraph({{0, 1}, {1, 0}});
  f.schedule.T = 1.0;
  f.schedule.m = 1;
  return f;
}

const CheckResult& check(const VerificationReport& r, const std::string& prefix) {
  for (const auto& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) return c;
  throw std::runtime_error("no check " + prefix);
}

class LinearSynthesis : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fixture_ = new Fixture(linear_fixture());
    problem_ = new LMIProblem(assemble_problem(fixture_->plant, fixture_->graph, fixture_->schedule, 0.0, 1.0));
    result_ = new SolveResult(solve_feasibility(*problem_));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete problem_;
    delete fixture_;
  }
  static Fixture* fixture_;
  static LMIProblem* problem_;
  static SolveResult* result_;
};

Fixture* LinearSynthesis::fixture_ = nullptr;
LMIProblem* LinearSynthesis::problem_ = nullptr;
SolveResult* LinearSynthesis::result_ = nullptr;

TEST_F(LinearSynthesis, ProblemShapes) {
  EXPECT_EQ(problem_->n, 3u);
  EXPECT_EQ(problem_->N, 2u);
  EXPECT_EQ(problem_->a_bar.rows(), 6u);
  EXPECT_EQ(problem_->h_under.rows(), 2u);
  EXPECT_EQ(problem_->d_bar, (Vector{1, 2, 1, 1, 2, 1}));
  EXPECT_DOUBLE_EQ(problem_->eps2_ratio(), 0.0);
}

TEST_F(LinearSynthesis, FeasibleAtMuStarOne) {
  ASSERT_EQ(result_->status, SolveStatus::kFeasible) << result_->message;
  ASSERT_TRUE(result_->certificate.has_value());
  const auto rep = verify_certificate(*problem_, *result_->certificate);
  EXPECT_TRUE(rep.passed);
  EXPECT_TRUE(rep.scalars_positive);
  EXPECT_EQ(rep.checks.size(), 5u);
}

TEST_F(LinearSynthesis, InjectionMatrixIsSymmetricAndNegative) {
  ASSERT_TRUE(result_->certificate.has_value());
  const auto& cert = *result_->certificate;
  const auto m = injection_lmi_matrix(*problem_, cert);
  EXPECT_LT(numerics::asymmetry(m), 1e-14);
  EXPECT_LE(numerics::lambda_max(m), -cert.eps1 + 1e-7);
}

TEST_F(LinearSynthesis, ScalingPreservesFeasibility) {
  ASSERT_TRUE(result_->certificate.has_value());
  auto cert = *result_->certificate;
  for (auto& p : cert.p_blocks) p *= 2.0;
  for (auto& q : cert.q_rows)
    for (auto& v : q) v *= 2.0;
  cert.eps1 *= 2.0;
  cert.eps2 *= 2.0;
  cert.eps3 *= 2.0;
  EXPECT_TRUE(verify_certificate(*problem_, cert).passed);
}

TEST_F(LinearSynthesis, ZeroEps2FailsPrescribedTimeCheck) {
  ASSERT_TRUE(result_->certificate.has_value());
  auto cert = *result_->certificate;
  cert.eps2 = 0.0;
  const auto problem = assemble_problem(fixture_->plant, fixture_->graph, fixture_->schedule, 0.5, 1.0);
  const auto rep = verify_certificate(problem, cert);
  EXPECT_FALSE(rep.passed);
  EXPECT_FALSE(check(rep, "prescribed").passed);
  EXPECT_TRUE(check(rep, "injection").passed);
}

TEST_F(LinearSynthesis, IndefiniteBlockFailsPositivity) {
  ASSERT_TRUE(result_->certificate.has_value());
  auto cert = *result_->certificate;
  cert.p_blocks[1](0, 0) = -1.0;
  EXPECT_FALSE(check(verify_certificate(*problem_, cert), "P > 0").passed);
  EXPECT_THROW(extract_gains(cert), NumericalError);
}

TEST_F(LinearSynthesis, GainsSolvePQ) {
  ASSERT_TRUE(result_->certificate.has_value());
  const auto& cert = *result_->certificate;
  const auto g = extract_gains(cert);
  ASSERT_EQ(g.L.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const Vector pl = cert.p_blocks[i] * g.L[i];
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(pl[k], cert.q_rows[i][k], 1e-10);
  }
}

TEST(Synthesis, HugeKfIsUndecided) {
  const auto f = linear_fixture();
  const auto problem = assemble_problem(f.plant, f.graph, f.schedule, 1e9, 1.0);
  const auto r = solve_feasibility(problem);
  EXPECT_EQ(r.status, SolveStatus::kUndecided);
  EXPECT_FALSE(r.certificate.has_value());
  EXPECT_FALSE(r.blocking_constraint.empty());
}

TEST(Synthesis, AssembleValidates) {
  const auto f = linear_fixture();
  EXPECT_THROW(assemble_problem(f.plant, f.graph, f.schedule, 0.0, 0.5), ValidationError);
  const auto three = graph::validate_digraph({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  EXPECT_THROW(assemble_problem(f.plant, three, f.schedule, 0.0, 1.0), ValidationError);
}

TEST(Synthesis, PickTStar) {
  gains::GainSchedule s;
  s.T = 2.0;
  s.m = 2;
  EXPECT_NEAR(pick_t_star(100.0, s), 1.98, 1e-12);
  EXPECT_DOUBLE_EQ(pick_t_star(1.0, s), 0.0);
  EXPECT_THROW(pick_t_star(0.5, s), DomainError);
}

}  // namespace
}  // namespace ptonet::synthesis
