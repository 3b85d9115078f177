#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "smval/market.hpp"
#include "smval/milp.hpp"
#include "smval/scenario.hpp"

namespace smval {

/// One two-stage day-ahead / balancing procurement problem. Volumes are in
/// MWh; scenario errors are MWh deviations from the forecast.
struct ProcurementInstance {
  Eigen::VectorXd d_fore;
  ErrorScenarioSet scenarios;
  PriceCurve da_curve;
  std::vector<PriceCurve> bal_curves;  // one shared curve or one per scenario
  SystemExogenous exogenous;
  double beta = 0.0;    // risk aversion
  double alpha = 0.95;  // CVaR confidence
  Eigen::VectorXd da_min, da_max;   // per period
  Eigen::MatrixXd bal_min, bal_max; // scenarios x periods

  Eigen::Index periods() const { return d_fore.size(); }
  Eigen::Index num_scenarios() const { return scenarios.num_scenarios(); }
  const PriceCurve& bal_curve(Eigen::Index s) const {
    return bal_curves.size() == 1 ? bal_curves.front() : bal_curves[static_cast<std::size_t>(s)];
  }

  /// Throws if dimensions, probabilities, risk parameters or bounds are
  /// inconsistent, or a price grid misses a reachable demand (the message
  /// names the period).
  void validate() const;
};

/// Fills bounds of +-bound_multiple * max|d_fore| for every volume variable.
void set_default_bounds(ProcurementInstance& inst, double bound_multiple = 3.0);

/// Column indices of the explicit MILP.
struct MilpLayout {
  Eigen::Index T = 0, S = 0, B = 0, F = 0;
  std::vector<int> d_da;     // t
  std::vector<int> d_bal;    // s*T + t
  std::vector<int> u_da;     // t*B + b
  std::vector<int> c_da;     // t*B + b
  std::vector<int> u_bal;    // (s*T + t)*F + f
  std::vector<int> c_bal;    // (s*T + t)*F + f
  int zeta = -1;
  std::vector<int> eta;      // s
  int num_linearization_rows = 0;
  int num_sos_rows = 0;
};

/// The risk-constrained procurement problem as an explicit MILP. Each
/// product u*d is carried by a column C for the shifted volume d - d_min:
/// C <= M u, C <= d - d_min, C >= d - d_min - M (1 - u), C >= 0 (bound), with
/// M = d_max - d_min; the objective adds the matching u * d_min term.
struct ProcurementModel {
  milp::Model model;
  MilpLayout layout;
  ProcurementInstance instance;
};

ProcurementModel build_milp(const ProcurementInstance& inst);

struct Solution {
  std::string status;        // optimal / infeasible / node_limit
  Eigen::VectorXd d_da;      // T
  Eigen::MatrixXd d_bal;     // S x T
  std::vector<int> u_da;     // selected day-ahead level per period
  Eigen::MatrixXi u_bal;     // selected balancing level per scenario/period
  Eigen::VectorXd price_da;
  Eigen::MatrixXd price_bal;
  Eigen::VectorXd scenario_costs;
  double zeta = 0.0;
  Eigen::VectorXd eta;
  double objective = 0.0;      // expected cost + beta * CVaR
  double expected_cost = 0.0;  // Omega-hat
  double cvar = 0.0;
  double gap = 0.0;
  long nodes = 0;
  double linearization_residual = 0.0;  // max |C - u d| over all products
  int infeasible_row = -1;
};

/// Branch and bound on the explicit MILP.
Solution solve(const ProcurementModel& model, double tol = 1e-6,
               long max_nodes = 2'000'000);

/// Exact solve via the per-period segment decomposition: between consecutive
/// bracket edges every price is fixed, so each period's day-ahead volume
/// ranges over closed segments with affine scenario costs. beta = 0 separates
/// by period; otherwise branch and bound over segment choices with LP bounds.
Solution solve_instance(const ProcurementInstance& inst, double tol = 1e-6,
                        long max_nodes = 2'000'000);

/// Enumerates every SOS1-feasible bracket assignment and searches day-ahead
/// volumes on a grid plus the candidate vertices of the CVaR kinks.
Solution brute_force_oracle(const ProcurementInstance& inst, int grid_points);

/// min_z z + 1/(1-alpha) sum_s p_s max(c_s - z, 0), scanning z over the costs.
double cvar_of_costs(const Eigen::Ref<const Eigen::VectorXd>& costs,
                     const Eigen::Ref<const Eigen::VectorXd>& probs, double alpha);

/// alpha-quantile (value-at-risk) of a discrete cost distribution.
double var_of_costs(const Eigen::Ref<const Eigen::VectorXd>& costs,
                    const Eigen::Ref<const Eigen::VectorXd>& probs, double alpha);

/// Scenario costs of a plan using the prices of the selected levels.
Eigen::VectorXd plan_scenario_costs(const ProcurementInstance& inst, const Solution& plan);

// Instance files are JSON; see README for the schema.
void write_instance_json(const ProcurementInstance& inst, const std::filesystem::path& path);
ProcurementInstance read_instance_json(const std::filesystem::path& path);

// Writes solution_da.csv (t,d_da_mwh,price_da), solution_bal.csv
// (s,t,d_bal_mwh,price_bal) and solution_summary.csv.
void write_solution_csv(const Solution& sol, const std::filesystem::path& dir);

}  // namespace smval
