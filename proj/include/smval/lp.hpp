#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace smval::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, GreaterEqual, Equal };

struct Row {
  std::vector<std::pair<int, double>> terms;  // (column, coefficient)
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

/// min c'x  s.t.  rows,  lower <= x <= upper. Bounds may be infinite.
struct LinearProgram {
  Eigen::VectorXd cost;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<Row> rows;

  int num_columns() const { return static_cast<int>(cost.size()); }
  int add_column(double c, double lo, double hi);
  int add_row(Row row);
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(Status s);

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  int max_iterations = 200000;
  int refactor_every = 64;
  int degenerate_before_bland = 40;
};

struct Result {
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  int infeasible_row = -1;  // row carrying the largest phase-1 residual
};

/// Two-phase bounded-variable primal simplex on a dense tableau. Nonbasic
/// variables rest at a finite bound (free ones at zero); an entering variable
/// that reaches its opposite bound first flips without a basis change.
/// Dantzig pricing, with Bland's rule after a run of degenerate pivots.
Result solve(const LinearProgram& lp, const Options& opts = {});

}  // namespace smval::lp
