#include "smval/milp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace smval::milp {

int Model::add_variable(std::string name, double lo, double hi, double cost, bool is_binary) {
  if (is_binary && (lo < 0.0 || hi > 1.0)) {
    throw std::invalid_argument("milp: binary variable " + name + " with bounds outside [0, 1]");
  }
  binary.push_back(is_binary);
  names.push_back(std::move(name));
  return lp.add_column(cost, lo, hi);
}

int Model::add_row(std::vector<std::pair<int, double>> terms, lp::Sense sense, double rhs) {
  lp::Row row;
  row.terms = std::move(terms);
  row.sense = sense;
  row.rhs = rhs;
  return lp.add_row(std::move(row));
}

int Model::num_binaries() const {
  int n = 0;
  for (bool b : binary) n += b;
  return n;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NodeLimit: return "node_limit";
  }
  return "unknown";
}

Result solve(const Model& model, const Options& opts) {
  struct Node {
    Eigen::VectorXd lower, upper;
  };
  constexpr double kNoIncumbent = std::numeric_limits<double>::infinity();

  Result res;
  double incumbent = kNoIncumbent;
  double pruned_bound = kNoIncumbent;
  bool hit_limit = false;

  lp::LinearProgram relaxation = model.lp;
  std::vector<Node> stack;
  stack.push_back({model.lp.lower, model.lp.upper});

  while (!stack.empty()) {
    if (res.nodes >= opts.max_nodes) {
      hit_limit = true;
      pruned_bound = -kNoIncumbent;  // open nodes carry no bound
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    ++res.nodes;

    relaxation.lower = node.lower;
    relaxation.upper = node.upper;
    const lp::Result lp_res = lp::solve(relaxation, opts.lp);
    if (lp_res.status == lp::Status::Unbounded) {
      throw std::runtime_error("milp::solve: LP relaxation unbounded (missing variable bounds)");
    }
    if (lp_res.status == lp::Status::IterationLimit) {
      throw std::runtime_error("milp::solve: LP iteration limit reached");
    }
    if (lp_res.status == lp::Status::Infeasible) {
      if (res.nodes == 1) res.infeasible_row = lp_res.infeasible_row;
      continue;
    }
    if (lp_res.objective >= incumbent - opts.gap_tol) {
      pruned_bound = std::min(pruned_bound, lp_res.objective);
      continue;
    }

    int branch = -1;
    double best = -1.0;
    for (int j = 0; j < model.num_variables(); ++j) {
      if (!model.binary[static_cast<std::size_t>(j)]) continue;
      const double v = lp_res.x[j];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > opts.integrality_tol && frac > best + 1e-12) {
        best = frac;
        branch = j;
      }
    }
    if (branch < 0) {
      incumbent = lp_res.objective;
      res.x = lp_res.x;
      for (int j = 0; j < model.num_variables(); ++j) {
        if (model.binary[static_cast<std::size_t>(j)]) res.x[j] = std::round(res.x[j]);
      }
      continue;
    }
    Node down = node;
    down.upper[branch] = 0.0;
    Node up = std::move(node);
    up.lower[branch] = 1.0;
    stack.push_back(std::move(down));
    stack.push_back(std::move(up));
  }

  if (incumbent == kNoIncumbent) {
    res.status = hit_limit ? Status::NodeLimit : Status::Infeasible;
    return res;
  }
  res.infeasible_row = -1;
  res.objective = incumbent;
  res.bound = std::min(incumbent, pruned_bound);
  res.gap = incumbent - res.bound;
  res.status = hit_limit ? Status::NodeLimit : Status::Optimal;
  return res;
}

}  // namespace smval::milp
