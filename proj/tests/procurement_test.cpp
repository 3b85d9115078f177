#include "smval/procurement.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gtest/gtest.h"
#include "support/oracles.hpp"

namespace smval {
namespace {

using testing::random_instance;

TEST(CvarTest, MatchesTailIntegral) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 9;
    Eigen::VectorXd c(n), p(n);
    for (int i = 0; i < n; ++i) {
      c[i] = std::round(10 * u(rng));  // ties are common
      p[i] = 0.1 + u(rng);
    }
    p /= p.sum();
    const double alpha = 0.05 + 0.9 * u(rng);
    EXPECT_NEAR(cvar_of_costs(c, p, alpha), testing::tail_average_cvar(c, p, alpha), 1e-9);
  }
}

TEST(CvarTest, Examples) {
  const Eigen::Vector4d c(1.0, 2.0, 3.0, 4.0);
  const Eigen::Vector4d p = Eigen::Vector4d::Constant(0.25);
  EXPECT_NEAR(cvar_of_costs(c, p, 0.5), 3.5, 1e-12);
  EXPECT_NEAR(cvar_of_costs(c, p, 0.75), 4.0, 1e-12);
  EXPECT_NEAR(var_of_costs(c, p, 0.5), 2.0, 1e-12);
  EXPECT_NEAR(var_of_costs(c, p, 0.6), 3.0, 1e-12);
  EXPECT_NEAR(cvar_of_costs(Eigen::Vector2d(5.0, 5.0), Eigen::Vector2d(0.5, 0.5), 0.9), 5.0, 1e-12);
  // CVaR never falls below the mean.
  EXPECT_GE(cvar_of_costs(c, p, 0.1), c.dot(p) - 1e-12);
}

TEST(ValidateTest, RejectsInconsistentInstances) {
  const ProcurementInstance good = random_instance(1, 2, 3, 4, 4, 0.5);
  EXPECT_NO_THROW(good.validate());

  ProcurementInstance bad = good;
  bad.scenarios.probabilities[0] += 0.1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);

  bad = good;
  bad.beta = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);

  bad = good;
  bad.alpha = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);

  bad = good;
  bad.da_max[1] = 50.0;
  try {
    bad.validate();
    FAIL() << "expected a coverage error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("period 1"), std::string::npos) << e.what();
  }

  bad = good;
  bad.bal_curves.pop_back();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(BuildMilpTest, Layout) {
  const int T = 2, S = 3, B = 4, F = 5;
  const ProcurementModel pm = build_milp(random_instance(3, T, S, B, F, 0.4));
  const MilpLayout& l = pm.layout;
  EXPECT_EQ(l.u_da.size(), static_cast<std::size_t>(T * B));
  EXPECT_EQ(l.u_bal.size(), static_cast<std::size_t>(S * T * F));
  EXPECT_EQ(l.eta.size(), static_cast<std::size_t>(S));
  EXPECT_EQ(l.num_linearization_rows, 3 * (T * B + S * T * F));
  EXPECT_EQ(l.num_sos_rows, T + S * T);
  EXPECT_EQ(pm.model.num_binaries(), T * B + S * T * F);
  EXPECT_EQ(pm.model.num_variables(), T + S * T + 2 * T * B + 2 * S * T * F + 1 + S);
  for (int c : l.c_da) EXPECT_EQ(pm.model.lp.lower[c], 0.0);
}

void expect_balanced(const ProcurementInstance& inst, const Solution& sol) {
  for (Eigen::Index s = 0; s < inst.num_scenarios(); ++s)
    for (Eigen::Index t = 0; t < inst.periods(); ++t)
      EXPECT_NEAR(sol.d_da[t] + sol.d_bal(s, t), inst.d_fore[t] + inst.scenarios.errors(s, t), 1e-7);
}

class SolverAgreementTest : public ::testing::TestWithParam<double> {};

TEST_P(SolverAgreementTest, ExplicitStructuredAndBruteForceAgree) {
  const double beta = GetParam();
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const ProcurementInstance inst = random_instance(seed, 2, 2, 3, 3, beta);
    const Solution milp = solve(build_milp(inst));
    const Solution fast = solve_instance(inst);
    const Solution brute = brute_force_oracle(inst, 41);
    ASSERT_EQ(milp.status, "optimal");
    ASSERT_EQ(fast.status, "optimal");
    ASSERT_EQ(brute.status, "optimal");
    const double tol = 1e-6 * std::max(1.0, std::abs(brute.objective));
    EXPECT_NEAR(milp.objective, brute.objective, tol) << "seed " << seed;
    EXPECT_NEAR(fast.objective, brute.objective, tol) << "seed " << seed;
    EXPECT_LT(milp.linearization_residual, 1e-9);
    expect_balanced(inst, milp);
    expect_balanced(inst, fast);
    // Reported objective equals a fresh evaluation of the plan.
    const Eigen::VectorXd costs = plan_scenario_costs(inst, fast);
    const double recomputed = inst.scenarios.probabilities.dot(costs) +
                              beta * cvar_of_costs(costs, inst.scenarios.probabilities, inst.alpha);
    EXPECT_NEAR(fast.objective, recomputed, 1e-9 * std::max(1.0, std::abs(recomputed)));
  }
}

INSTANTIATE_TEST_SUITE_P(Beta, SolverAgreementTest, ::testing::Values(0.0, 0.7, 5.0));

TEST(SolveInstanceTest, RiskNeutralSeparatesByPeriod) {
  const ProcurementInstance inst = random_instance(9, 3, 4, 5, 5, 0.0);
  const Solution whole = solve_instance(inst);
  ASSERT_EQ(whole.status, "optimal");
  for (Eigen::Index t = 0; t < inst.periods(); ++t) {
    ProcurementInstance one = inst;
    one.d_fore = inst.d_fore.segment(t, 1);
    one.scenarios.errors = inst.scenarios.errors.col(t);
    one.da_min = inst.da_min.segment(t, 1);
    one.da_max = inst.da_max.segment(t, 1);
    one.bal_min = inst.bal_min.col(t);
    one.bal_max = inst.bal_max.col(t);
    one.exogenous.d_sys_base = inst.exogenous.d_sys_base.segment(t, 1);
    one.exogenous.d_imb_base = inst.exogenous.d_imb_base.col(t);
    const Solution part = solve_instance(one);
    ASSERT_EQ(part.status, "optimal");
    const auto& p = inst.scenarios.probabilities;
    const double part_cost =
        part.price_da[0] * part.d_da[0] + p.dot(part.price_bal.col(0).cwiseProduct(part.d_bal.col(0)));
    const double whole_cost =
        whole.price_da[t] * whole.d_da[t] + p.dot(whole.price_bal.col(t).cwiseProduct(whole.d_bal.col(t)));
    EXPECT_NEAR(part_cost, whole_cost, 1e-9);
  }
}

TEST(SolveInstanceTest, RiskAversionTradesMeanForTail) {
  const ProcurementInstance base = random_instance(21, 3, 8, 6, 6, 0.0);
  double prev_cvar = lp::kInf, prev_mean = -lp::kInf;
  for (double beta : {0.0, 0.5, 2.0, 10.0}) {
    ProcurementInstance inst = base;
    inst.beta = beta;
    const Solution sol = solve_instance(inst);
    ASSERT_EQ(sol.status, "optimal");
    EXPECT_LE(sol.cvar, prev_cvar + 1e-7);
    EXPECT_GE(sol.expected_cost, prev_mean - 1e-7);
    prev_cvar = sol.cvar;
    prev_mean = sol.expected_cost;
  }
}

TEST(SolveInstanceTest, NodeLimitKeepsAValidBound) {
  int limited_runs = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ProcurementInstance inst = random_instance(seed, 5, 8, 6, 6, 3.0);
    const Solution full = solve_instance(inst);
    ASSERT_EQ(full.status, "optimal");
    const Solution limited = solve_instance(inst, 1e-6, 1);
    if (limited.status != "node_limit") continue;
    ++limited_runs;
    ASSERT_TRUE(std::isfinite(limited.gap)) << "seed " << seed;
    EXPECT_GE(limited.gap, 0.0);
    EXPECT_GE(limited.objective, full.objective - 1e-7);
    EXPECT_LE(limited.objective - limited.gap, full.objective + 1e-7);
  }
  EXPECT_GT(limited_runs, 0);
}

TEST(SolveInstanceTest, ReportsInfeasibleBounds) {
  ProcurementInstance inst = random_instance(4, 2, 2, 3, 3, 0.0);
  inst.da_max[1] = 0.1;
  inst.bal_max.col(1).setConstant(0.1);
  const Solution sol = solve_instance(inst);
  EXPECT_EQ(sol.status, "infeasible");
  EXPECT_EQ(sol.infeasible_row, 1);
}

TEST(BruteForceTest, RefusesLargeInstances) {
  EXPECT_THROW(brute_force_oracle(random_instance(1, 6, 6, 10, 10, 1.0), 21), std::invalid_argument);
}

TEST(InstanceJsonTest, RoundTrips) {
  const ProcurementInstance inst = random_instance(6, 3, 2, 4, 4, 0.3);
  const auto path = std::filesystem::temp_directory_path() / "smval_instance_test.json";
  write_instance_json(inst, path);
  const ProcurementInstance back = read_instance_json(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.d_fore, inst.d_fore);
  EXPECT_EQ(back.scenarios.errors, inst.scenarios.errors);
  EXPECT_EQ(back.scenarios.probabilities, inst.scenarios.probabilities);
  EXPECT_EQ(back.da_curve.prices, inst.da_curve.prices);
  EXPECT_EQ(back.bal_curves.size(), inst.bal_curves.size());
  EXPECT_EQ(back.da_max, inst.da_max);
  EXPECT_EQ(back.bal_min, inst.bal_min);
  EXPECT_EQ(back.beta, inst.beta);
  EXPECT_EQ(back.alpha, inst.alpha);
  EXPECT_EQ(solve_instance(back).objective, solve_instance(inst).objective);
}

TEST(InstanceJsonTest, RejectsMalformedFiles) {
  const auto path = std::filesystem::temp_directory_path() / "smval_bad_instance.json";
  std::ofstream(path) << R"({"format": "smval-procurement-1", "beta": 0})";
  EXPECT_ANY_THROW(read_instance_json(path));
  std::ofstream(path) << "not json";
  EXPECT_ANY_THROW(read_instance_json(path));
  std::filesystem::remove(path);
}

TEST(SolutionCsvTest, WritesThreeFiles) {
  const ProcurementInstance inst = random_instance(2, 2, 2, 3, 3, 0.0);
  const Solution sol = solve_instance(inst);
  const auto dir = std::filesystem::temp_directory_path() / "smval_solution_test";
  std::filesystem::create_directories(dir);
  write_solution_csv(sol, dir);
  const auto first_line = [&](const char* name) {
    std::ifstream in(dir / name);
    std::string line;
    std::getline(in, line);
    return line;
  };
  EXPECT_EQ(first_line("solution_da.csv"), "t,d_da_mwh,price_da");
  EXPECT_EQ(first_line("solution_bal.csv"), "s,t,d_bal_mwh,price_bal");
  EXPECT_EQ(first_line("solution_summary.csv"), "status,objective,expected_cost,cvar,zeta,gap,nodes");
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace smval
