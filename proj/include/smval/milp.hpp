#pragma once

#include <string>
#include <vector>

#include "smval/lp.hpp"

namespace smval::milp {

/// A linear program plus integrality flags; integer columns must be binary.
struct Model {
  lp::LinearProgram lp;
  std::vector<bool> binary;
  std::vector<std::string> names;

  int add_variable(std::string name, double lo, double hi, double cost, bool is_binary = false);
  int add_row(std::vector<std::pair<int, double>> terms, lp::Sense sense, double rhs);

  int num_variables() const { return lp.num_columns(); }
  int num_rows() const { return static_cast<int>(lp.rows.size()); }
  int num_binaries() const;
};

enum class Status { Optimal, Infeasible, Unbounded, NodeLimit };

std::string to_string(Status s);

struct Options {
  double gap_tol = 1e-6;          // absolute
  double integrality_tol = 1e-6;
  long max_nodes = 2'000'000;
  lp::Options lp;
};

struct Result {
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  double bound = 0.0;   // best proven lower bound
  double gap = 0.0;     // objective - bound
  long nodes = 0;
  int infeasible_row = -1;  // root phase-1 certificate when infeasible
};

/// Depth-first branch and bound. Each node solves the LP relaxation; the
/// branching column is the most fractional binary (lowest index on ties) and
/// the up-branch is explored first. Nodes whose bound is within gap_tol of
/// the incumbent are pruned, so the reported gap is at most gap_tol.
Result solve(const Model& model, const Options& opts = {});

}  // namespace smval::milp
