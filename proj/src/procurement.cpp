#include "smval/procurement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include <json.hpp>

#include "smval/csv.hpp"

namespace smval {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double edge_tol(const PriceCurve& curve) { return 1e-9 * std::max(1.0, curve.delta); }

// Levels whose bracket contains `demand` (one, or two on a shared edge).
std::vector<int> levels_containing(const PriceCurve& curve, double demand) {
  std::vector<int> out;
  const auto b0 = level_index(curve, demand);
  const double half = 0.5 * curve.delta + edge_tol(curve);
  for (Eigen::Index b = std::max<Eigen::Index>(0, b0 - 1); b <= std::min(curve.size() - 1, b0 + 1); ++b) {
    if (std::abs(curve.levels[b] - demand) <= half) out.push_back(static_cast<int>(b));
  }
  return out;
}

// Lower and upper edges of every bracket, in ascending order.
std::vector<double> bracket_edges(const PriceCurve& curve) {
  std::vector<double> edges;
  edges.push_back(curve.lowest_demand());
  for (Eigen::Index b = 1; b < curve.size(); ++b) {
    edges.push_back(0.5 * (curve.levels[b - 1] + curve.levels[b]));
  }
  edges.push_back(curve.highest_demand());
  return edges;
}

double residual_demand(const ProcurementInstance& inst, Eigen::Index s, Eigen::Index t) {
  return inst.d_fore[t] + inst.scenarios.errors(s, t);
}

// Per-period closed range of day-ahead volumes allowed by both bound sets.
std::pair<double, double> da_domain(const ProcurementInstance& inst, Eigen::Index t) {
  double lo = inst.da_min[t], hi = inst.da_max[t];
  for (Eigen::Index s = 0; s < inst.num_scenarios(); ++s) {
    const double need = residual_demand(inst, s, t);
    lo = std::max(lo, need - inst.bal_max(s, t));
    hi = std::min(hi, need - inst.bal_min(s, t));
  }
  return {lo, hi};
}

Solution finish_plan(const ProcurementInstance& inst, Solution sol) {
  sol.scenario_costs = plan_scenario_costs(inst, sol);
  const Eigen::VectorXd& p = inst.scenarios.probabilities;
  sol.expected_cost = p.dot(sol.scenario_costs);
  sol.cvar = cvar_of_costs(sol.scenario_costs, p, inst.alpha);
  sol.eta = (sol.scenario_costs.array() - sol.zeta).cwiseMax(0.0).matrix();
  return sol;
}

Solution empty_solution(const ProcurementInstance& inst) {
  Solution sol;
  const auto T = inst.periods(), S = inst.num_scenarios();
  sol.d_da = Eigen::VectorXd::Zero(T);
  sol.d_bal = Eigen::MatrixXd::Zero(S, T);
  sol.u_da.assign(static_cast<std::size_t>(T), -1);
  sol.u_bal = Eigen::MatrixXi::Constant(S, T, -1);
  sol.price_da = Eigen::VectorXd::Zero(T);
  sol.price_bal = Eigen::MatrixXd::Zero(S, T);
  return sol;
}

}  // namespace

// -- instance ---------------------------------------------------------------

void ProcurementInstance::validate() const {
  const auto T = periods();
  const auto S = num_scenarios();
  if (T < 1 || S < 1) throw std::invalid_argument("procurement: need T >= 1 and S >= 1");
  if (scenarios.errors.cols() != T || scenarios.probabilities.size() != S) {
    throw std::invalid_argument("procurement: scenario matrix does not match the forecast");
  }
  if ((scenarios.probabilities.array() <= 0.0).any() ||
      std::abs(scenarios.probabilities.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("procurement: scenario probabilities must be positive and sum to 1");
  }
  if (bal_curves.size() != 1 && static_cast<Eigen::Index>(bal_curves.size()) != S) {
    throw std::invalid_argument("procurement: need one balancing curve or one per scenario");
  }
  if (exogenous.d_sys_base.size() != T || exogenous.d_imb_base.rows() != S ||
      exogenous.d_imb_base.cols() != T) {
    throw std::invalid_argument("procurement: exogenous volumes have the wrong shape");
  }
  if (!(beta >= 0.0)) throw std::invalid_argument("procurement: beta must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("procurement: alpha must lie in (0, 1)");
  if (da_min.size() != T || da_max.size() != T || bal_min.rows() != S || bal_min.cols() != T ||
      bal_max.rows() != S || bal_max.cols() != T) {
    throw std::invalid_argument("procurement: volume bounds have the wrong shape");
  }
  if (!da_min.allFinite() || !da_max.allFinite() || !bal_min.allFinite() || !bal_max.allFinite()) {
    throw std::invalid_argument("procurement: volume bounds must be finite");
  }
  if ((da_min.array() > da_max.array()).any() || (bal_min.array() > bal_max.array()).any()) {
    throw std::invalid_argument("procurement: lower volume bound exceeds upper bound");
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    const double base = exogenous.d_sys_base[t];
    if (!da_curve.covers(base + da_min[t], base + da_max[t])) {
      throw std::invalid_argument("procurement: day-ahead price grid does not cover period " +
                                  std::to_string(t));
    }
    for (Eigen::Index s = 0; s < S; ++s) {
      const double imb = exogenous.d_imb_base(s, t);
      if (!bal_curve(s).covers(imb + bal_min(s, t), imb + bal_max(s, t))) {
        throw std::invalid_argument("procurement: balancing price grid does not cover period " +
                                    std::to_string(t) + " in scenario " + std::to_string(s));
      }
    }
  }
}

void set_default_bounds(ProcurementInstance& inst, double bound_multiple) {
  double m = inst.d_fore.cwiseAbs().maxCoeff();
  if (!(m > 0.0)) m = 1.0;
  const double r = bound_multiple * m;
  const auto T = inst.periods(), S = inst.num_scenarios();
  inst.da_min = Eigen::VectorXd::Constant(T, -r);
  inst.da_max = Eigen::VectorXd::Constant(T, r);
  inst.bal_min = Eigen::MatrixXd::Constant(S, T, -r);
  inst.bal_max = Eigen::MatrixXd::Constant(S, T, r);
}

// -- explicit MILP ------------------------------------------------------------

ProcurementModel build_milp(const ProcurementInstance& inst) {
  inst.validate();
  using lp::Sense;
  ProcurementModel pm;
  pm.instance = inst;
  auto& m = pm.model;
  auto& L = pm.layout;
  L.T = inst.periods();
  L.S = inst.num_scenarios();
  L.B = inst.da_curve.size();
  L.F = inst.bal_curve(0).size();
  for (Eigen::Index s = 1; s < L.S; ++s) {
    if (inst.bal_curve(s).size() != L.F) {
      throw std::invalid_argument("build_milp: balancing curves differ in level count");
    }
  }
  const Eigen::VectorXd& prob = inst.scenarios.probabilities;
  const auto idx = [](Eigen::Index i) { return std::to_string(i); };

  for (Eigen::Index t = 0; t < L.T; ++t) {
    L.d_da.push_back(m.add_variable("d_da[" + idx(t) + "]", inst.da_min[t], inst.da_max[t], 0.0));
  }
  for (Eigen::Index s = 0; s < L.S; ++s) {
    for (Eigen::Index t = 0; t < L.T; ++t) {
      L.d_bal.push_back(m.add_variable("d_bal[" + idx(s) + "," + idx(t) + "]", inst.bal_min(s, t),
                                       inst.bal_max(s, t), 0.0));
    }
  }
  // Day-ahead price selection; the cost is sum_b lambda_b (C + d_min u).
  for (Eigen::Index t = 0; t < L.T; ++t) {
    for (Eigen::Index b = 0; b < L.B; ++b) {
      const double lambda = inst.da_curve.prices[b];
      const std::string tag = "[" + idx(t) + "," + idx(b) + "]";
      L.u_da.push_back(m.add_variable("u_da" + tag, 0.0, 1.0, lambda * inst.da_min[t], true));
      L.c_da.push_back(m.add_variable("C_da" + tag, 0.0, lp::kInf, lambda));
    }
  }
  for (Eigen::Index s = 0; s < L.S; ++s) {
    const PriceCurve& curve = inst.bal_curve(s);
    for (Eigen::Index t = 0; t < L.T; ++t) {
      for (Eigen::Index f = 0; f < L.F; ++f) {
        const double w = prob[s] * curve.prices[f];
        const std::string tag = "[" + idx(s) + "," + idx(t) + "," + idx(f) + "]";
        L.u_bal.push_back(m.add_variable("u_bal" + tag, 0.0, 1.0, w * inst.bal_min(s, t), true));
        L.c_bal.push_back(m.add_variable("C_bal" + tag, 0.0, lp::kInf, w));
      }
    }
  }
  L.zeta = m.add_variable("zeta", -lp::kInf, lp::kInf, inst.beta);
  for (Eigen::Index s = 0; s < L.S; ++s) {
    L.eta.push_back(m.add_variable("eta[" + idx(s) + "]", 0.0, lp::kInf,
                                   inst.beta * prob[s] / (1.0 - inst.alpha)));
  }

  const auto da_at = [&](Eigen::Index t, Eigen::Index b) {
    return static_cast<std::size_t>(t * L.B + b);
  };
  const auto bal_at = [&](Eigen::Index s, Eigen::Index t, Eigen::Index f) {
    return static_cast<std::size_t>((s * L.T + t) * L.F + f);
  };
  const auto st = [&](Eigen::Index s, Eigen::Index t) { return static_cast<std::size_t>(s * L.T + t); };

  // Balance: d_da + d_bal = d_fore + d_err.
  for (Eigen::Index s = 0; s < L.S; ++s) {
    for (Eigen::Index t = 0; t < L.T; ++t) {
      m.add_row({{L.d_da[static_cast<std::size_t>(t)], 1.0}, {L.d_bal[st(s, t)], 1.0}}, Sense::Equal,
                residual_demand(inst, s, t));
    }
  }
  // CVaR: scenario cost - zeta - eta_s <= 0.
  for (Eigen::Index s = 0; s < L.S; ++s) {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;
    for (Eigen::Index t = 0; t < L.T; ++t) {
      for (Eigen::Index b = 0; b < L.B; ++b) {
        const double lambda = inst.da_curve.prices[b];
        terms.emplace_back(L.c_da[da_at(t, b)], lambda);
        terms.emplace_back(L.u_da[da_at(t, b)], lambda * inst.da_min[t]);
      }
      for (Eigen::Index f = 0; f < L.F; ++f) {
        const double lambda = inst.bal_curve(s).prices[f];
        terms.emplace_back(L.c_bal[bal_at(s, t, f)], lambda);
        terms.emplace_back(L.u_bal[bal_at(s, t, f)], lambda * inst.bal_min(s, t));
      }
    }
    terms.emplace_back(L.zeta, -1.0);
    terms.emplace_back(L.eta[static_cast<std::size_t>(s)], -1.0);
    m.add_row(std::move(terms), Sense::LessEqual, constant);
  }
  // Level selection: total demand within delta/2 of the selected level, and
  // exactly one level per period (per scenario and period for balancing).
  for (Eigen::Index t = 0; t < L.T; ++t) {
    std::vector<std::pair<int, double>> terms, sos;
    for (Eigen::Index b = 0; b < L.B; ++b) {
      terms.emplace_back(L.u_da[da_at(t, b)], inst.da_curve.levels[b]);
      sos.emplace_back(L.u_da[da_at(t, b)], 1.0);
    }
    terms.emplace_back(L.d_da[static_cast<std::size_t>(t)], -1.0);
    const double base = inst.exogenous.d_sys_base[t];
    const double half = 0.5 * inst.da_curve.delta;
    m.add_row(terms, Sense::LessEqual, base + half);
    m.add_row(terms, Sense::GreaterEqual, base - half);
    m.add_row(std::move(sos), Sense::Equal, 1.0);
    ++L.num_sos_rows;
  }
  for (Eigen::Index s = 0; s < L.S; ++s) {
    const PriceCurve& curve = inst.bal_curve(s);
    for (Eigen::Index t = 0; t < L.T; ++t) {
      std::vector<std::pair<int, double>> terms, sos;
      for (Eigen::Index f = 0; f < L.F; ++f) {
        terms.emplace_back(L.u_bal[bal_at(s, t, f)], curve.levels[f]);
        sos.emplace_back(L.u_bal[bal_at(s, t, f)], 1.0);
      }
      terms.emplace_back(L.d_bal[st(s, t)], -1.0);
      const double base = inst.exogenous.d_imb_base(s, t);
      const double half = 0.5 * curve.delta;
      m.add_row(terms, Sense::LessEqual, base + half);
      m.add_row(terms, Sense::GreaterEqual, base - half);
      m.add_row(std::move(sos), Sense::Equal, 1.0);
      ++L.num_sos_rows;
    }
  }
  // Linearization of u * (d - d_min); C >= 0 is the column bound.
  const auto linearize = [&](int c, int u, int d, double d_min, double d_max) {
    const double big_m = d_max - d_min;
    m.add_row({{c, 1.0}, {u, -big_m}}, Sense::LessEqual, 0.0);
    m.add_row({{c, 1.0}, {d, -1.0}}, Sense::LessEqual, -d_min);
    m.add_row({{c, 1.0}, {d, -1.0}, {u, -big_m}}, Sense::GreaterEqual, -d_min - big_m);
    L.num_linearization_rows += 3;
  };
  for (Eigen::Index t = 0; t < L.T; ++t) {
    for (Eigen::Index b = 0; b < L.B; ++b) {
      linearize(L.c_da[da_at(t, b)], L.u_da[da_at(t, b)], L.d_da[static_cast<std::size_t>(t)],
                inst.da_min[t], inst.da_max[t]);
    }
  }
  for (Eigen::Index s = 0; s < L.S; ++s) {
    for (Eigen::Index t = 0; t < L.T; ++t) {
      for (Eigen::Index f = 0; f < L.F; ++f) {
        linearize(L.c_bal[bal_at(s, t, f)], L.u_bal[bal_at(s, t, f)], L.d_bal[st(s, t)],
                  inst.bal_min(s, t), inst.bal_max(s, t));
      }
    }
  }
  return pm;
}

Solution solve(const ProcurementModel& pm, double tol, long max_nodes) {
  const auto& L = pm.layout;
  const auto& inst = pm.instance;
  milp::Options opts;
  opts.gap_tol = tol;
  opts.max_nodes = max_nodes;
  const milp::Result res = milp::solve(pm.model, opts);

  Solution sol = empty_solution(inst);
  sol.status = milp::to_string(res.status);
  sol.nodes = res.nodes;
  sol.infeasible_row = res.infeasible_row;
  if (res.x.size() == 0) return sol;
  sol.gap = res.gap;
  sol.objective = res.objective;
  const Eigen::VectorXd& x = res.x;
  sol.zeta = x[L.zeta];

  for (Eigen::Index t = 0; t < L.T; ++t) {
    sol.d_da[t] = x[L.d_da[static_cast<std::size_t>(t)]];
    for (Eigen::Index b = 0; b < L.B; ++b) {
      const auto k = static_cast<std::size_t>(t * L.B + b);
      const double u = x[L.u_da[k]];
      if (u > 0.5) {
        sol.u_da[static_cast<std::size_t>(t)] = static_cast<int>(b);
        sol.price_da[t] = inst.da_curve.prices[b];
      }
      const double product = x[L.c_da[k]] + u * inst.da_min[t];
      sol.linearization_residual =
          std::max(sol.linearization_residual, std::abs(product - u * sol.d_da[t]));
    }
  }
  for (Eigen::Index s = 0; s < L.S; ++s) {
    for (Eigen::Index t = 0; t < L.T; ++t) {
      const double d = x[L.d_bal[static_cast<std::size_t>(s * L.T + t)]];
      sol.d_bal(s, t) = d;
      for (Eigen::Index f = 0; f < L.F; ++f) {
        const auto k = static_cast<std::size_t>((s * L.T + t) * L.F + f);
        const double u = x[L.u_bal[k]];
        if (u > 0.5) {
          sol.u_bal(s, t) = static_cast<int>(f);
          sol.price_bal(s, t) = inst.bal_curve(s).prices[f];
        }
        const double product = x[L.c_bal[k]] + u * inst.bal_min(s, t);
        sol.linearization_residual = std::max(sol.linearization_residual, std::abs(product - u * d));
      }
    }
  }
  sol = finish_plan(inst, std::move(sol));
  return sol;
}

// -- structured exact solver ----------------------------------------------------

namespace {

// A closed range of day-ahead volumes on which every selected level is fixed.
struct Segment {
  double lo = 0.0, hi = 0.0;
  int b = -1;
  std::vector<int> f;
  Eigen::VectorXd cost_lo, cost_hi;
};

Eigen::VectorXd segment_costs(const ProcurementInstance& inst, Eigen::Index t, double x, int b,
                              const std::vector<int>& f) {
  const auto S = inst.num_scenarios();
  Eigen::VectorXd c(S);
  const double da = inst.da_curve.prices[b] * x;
  for (Eigen::Index s = 0; s < S; ++s) {
    c[s] = da + inst.bal_curve(s).prices[f[static_cast<std::size_t>(s)]] * (residual_demand(inst, s, t) - x);
  }
  return c;
}

std::vector<Segment> period_segments(const ProcurementInstance& inst, Eigen::Index t) {
  const auto S = inst.num_scenarios();
  const auto [lo, hi] = da_domain(inst, t);
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  if (lo > hi + 1e-12 * scale) return {};

  const double base = inst.exogenous.d_sys_base[t];
  std::vector<double> points{lo, std::max(lo, hi)};
  for (double e : bracket_edges(inst.da_curve)) {
    const double x = e - base;
    if (x > lo && x < hi) points.push_back(x);
  }
  for (Eigen::Index s = 0; s < S; ++s) {
    const double shift = inst.exogenous.d_imb_base(s, t) + residual_demand(inst, s, t);
    for (double e : bracket_edges(inst.bal_curve(s))) {
      const double x = shift - e;
      if (x > lo && x < hi) points.push_back(x);
    }
  }
  std::sort(points.begin(), points.end());
  std::vector<double> uniq;
  for (double p : points) {
    if (uniq.empty() || p - uniq.back() > 1e-12 * scale) uniq.push_back(p);
  }

  const auto imbalance = [&](Eigen::Index s, double x) {
    return inst.exogenous.d_imb_base(s, t) + residual_demand(inst, s, t) - x;
  };
  std::vector<Segment> out;
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    const double p = uniq[i];
    // Point segment: at an edge each market may use either adjacent level;
    // the cheaper choice is never worse for any scenario.
    Segment point;
    point.lo = point.hi = p;
    double best = kInf;
    for (int b : levels_containing(inst.da_curve, base + p)) {
      const double c = inst.da_curve.prices[b] * p;
      if (c < best) {
        best = c;
        point.b = b;
      }
    }
    for (Eigen::Index s = 0; s < S; ++s) {
      const double d_bal = residual_demand(inst, s, t) - p;
      double best_f = kInf;
      int choice = -1;
      for (int f : levels_containing(inst.bal_curve(s), imbalance(s, p))) {
        const double c = inst.bal_curve(s).prices[f] * d_bal;
        if (c < best_f) {
          best_f = c;
          choice = f;
        }
      }
      point.f.push_back(choice);
    }
    point.cost_lo = point.cost_hi = segment_costs(inst, t, p, point.b, point.f);
    out.push_back(std::move(point));

    if (i + 1 == uniq.size()) break;
    Segment seg;
    seg.lo = p;
    seg.hi = uniq[i + 1];
    const double mid = 0.5 * (seg.lo + seg.hi);
    seg.b = static_cast<int>(level_index(inst.da_curve, base + mid));
    for (Eigen::Index s = 0; s < S; ++s) {
      seg.f.push_back(static_cast<int>(level_index(inst.bal_curve(s), imbalance(s, mid))));
    }
    seg.cost_lo = segment_costs(inst, t, seg.lo, seg.b, seg.f);
    seg.cost_hi = segment_costs(inst, t, seg.hi, seg.b, seg.f);
    out.push_back(std::move(seg));
  }
  return out;
}

struct Choice {
  int segment = -1;
  double x = 0.0;
};

Solution plan_from_choices(const ProcurementInstance& inst,
                           const std::vector<std::vector<Segment>>& segments,
                           const std::vector<Choice>& choice, double zeta) {
  Solution sol = empty_solution(inst);
  for (Eigen::Index t = 0; t < inst.periods(); ++t) {
    const Choice& c = choice[static_cast<std::size_t>(t)];
    const Segment& seg = segments[static_cast<std::size_t>(t)][static_cast<std::size_t>(c.segment)];
    sol.d_da[t] = c.x;
    sol.u_da[static_cast<std::size_t>(t)] = seg.b;
    sol.price_da[t] = inst.da_curve.prices[seg.b];
    for (Eigen::Index s = 0; s < inst.num_scenarios(); ++s) {
      const int f = seg.f[static_cast<std::size_t>(s)];
      sol.d_bal(s, t) = residual_demand(inst, s, t) - c.x;
      sol.u_bal(s, t) = f;
      sol.price_bal(s, t) = inst.bal_curve(s).prices[f];
    }
  }
  sol.zeta = zeta;
  sol = finish_plan(inst, std::move(sol));
  if (std::isnan(zeta)) {
    sol.zeta = var_of_costs(sol.scenario_costs, inst.scenarios.probabilities, inst.alpha);
    sol.eta = (sol.scenario_costs.array() - sol.zeta).cwiseMax(0.0).matrix();
  }
  sol.objective = sol.expected_cost + inst.beta * sol.cvar;
  return sol;
}

}  // namespace

Solution solve_instance(const ProcurementInstance& inst, double tol, long max_nodes) {
  inst.validate();
  const auto T = inst.periods();
  const auto S = inst.num_scenarios();
  const Eigen::VectorXd& prob = inst.scenarios.probabilities;

  std::vector<std::vector<Segment>> segments;
  for (Eigen::Index t = 0; t < T; ++t) {
    segments.push_back(period_segments(inst, t));
    if (segments.back().empty()) {
      Solution sol = empty_solution(inst);
      sol.status = "infeasible";
      sol.infeasible_row = static_cast<int>(t);
      return sol;
    }
  }

  // Risk-neutral optimum: each period independently takes the cheapest
  // segment end in expectation (costs are affine on a segment).
  std::vector<Choice> neutral(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    double best = kInf;
    const auto& segs = segments[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const double c_lo = prob.dot(segs[k].cost_lo);
      const double c_hi = prob.dot(segs[k].cost_hi);
      if (c_lo < best) {
        best = c_lo;
        neutral[static_cast<std::size_t>(t)] = {static_cast<int>(k), segs[k].lo};
      }
      if (c_hi < best) {
        best = c_hi;
        neutral[static_cast<std::size_t>(t)] = {static_cast<int>(k), segs[k].hi};
      }
    }
  }
  Solution incumbent = plan_from_choices(inst, segments, neutral, std::nan(""));
  incumbent.status = "optimal";
  incumbent.nodes = 0;
  if (inst.beta == 0.0) return incumbent;

  // The objective never decreases in any scenario cost, so a segment whose
  // two ends both cost at least as much as one fixed point in every scenario
  // can be dropped. A dominating point has no larger expected cost than the
  // cheaper end of the segment it dominates, so scanning segments by that
  // cost and testing against the ends kept so far is exact (dominance is
  // transitive).
  for (Eigen::Index t = 0; t < T; ++t) {
    auto& segs = segments[static_cast<std::size_t>(t)];
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t k = 0; k < segs.size(); ++k) {
      order.emplace_back(std::min(prob.dot(segs[k].cost_lo), prob.dot(segs[k].cost_hi)), k);
    }
    std::sort(order.begin(), order.end());
    std::vector<Segment> kept;
    for (const auto& [key, k] : order) {
      const Segment& cand = segs[k];
      const auto covers = [&](const Eigen::VectorXd& c) {
        return (c.array() <= cand.cost_lo.array()).all() && (c.array() <= cand.cost_hi.array()).all();
      };
      const bool dominated = std::any_of(kept.begin(), kept.end(), [&](const Segment& g) {
        return covers(g.cost_lo) || covers(g.cost_hi);
      });
      if (!dominated) kept.push_back(std::move(segs[k]));
    }
    std::sort(kept.begin(), kept.end(), [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
    segs = std::move(kept);
  }

  // Convex-combination relaxation: one column per segment end, a convexity
  // row per period and a CVaR row per scenario. Costs are rescaled to O(1).
  struct Column {
    Eigen::Index t;
    int segment;
    double x;
  };
  double cost_scale = 1.0;
  for (const auto& segs : segments) {
    for (const Segment& seg : segs) {
      cost_scale = std::max({cost_scale, seg.cost_lo.cwiseAbs().maxCoeff(), seg.cost_hi.cwiseAbs().maxCoeff()});
    }
  }
  const auto add_ends = [&](std::vector<Column>& cols, Eigen::Index t, int k) {
    const Segment& seg = segments[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
    cols.push_back({t, k, seg.lo});
    if (seg.hi > seg.lo) cols.push_back({t, k, seg.hi});
  };
  // Columns come first, then zeta, then one eta per scenario.
  const auto make_lp = [&](const std::vector<Column>& cols) {
    lp::LinearProgram lp;
    std::vector<lp::Row> convexity(static_cast<std::size_t>(T));
    std::vector<lp::Row> risk(static_cast<std::size_t>(S));
    for (const Column& col : cols) {
      const Segment& seg = segments[static_cast<std::size_t>(col.t)][static_cast<std::size_t>(col.segment)];
      const Eigen::VectorXd& c = col.x == seg.lo ? seg.cost_lo : seg.cost_hi;
      const int id = lp.add_column(prob.dot(c) / cost_scale, 0.0, 1.0);
      convexity[static_cast<std::size_t>(col.t)].terms.emplace_back(id, 1.0);
      for (Eigen::Index s = 0; s < S; ++s) risk[static_cast<std::size_t>(s)].terms.emplace_back(id, c[s] / cost_scale);
    }
    const int zeta = lp.add_column(inst.beta, -lp::kInf, lp::kInf);
    for (Eigen::Index s = 0; s < S; ++s) {
      const int eta = lp.add_column(inst.beta * prob[s] / (1.0 - inst.alpha), 0.0, lp::kInf);
      auto& row = risk[static_cast<std::size_t>(s)];
      row.terms.emplace_back(zeta, -1.0);
      row.terms.emplace_back(eta, -1.0);
      row.rhs = 0.0;
    }
    for (auto& row : convexity) {
      row.sense = lp::Sense::Equal;
      row.rhs = 1.0;
      lp.add_row(std::move(row));
    }
    for (auto& row : risk) lp.add_row(std::move(row));
    return lp;
  };
  // Weight of each positive segment per period, in segment order.
  using Weights = std::vector<std::vector<std::pair<int, double>>>;
  const auto segment_weights = [&](const std::vector<Column>& cols, const Eigen::VectorXd& x) {
    Weights w(static_cast<std::size_t>(T));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double v = x[static_cast<Eigen::Index>(j)];
      if (v <= 1e-9) continue;
      auto& wt = w[static_cast<std::size_t>(cols[j].t)];
      if (!wt.empty() && wt.back().first == cols[j].segment) {
        wt.back().second += v;
      } else {
        wt.emplace_back(cols[j].segment, v);
      }
    }
    return w;
  };
  // Plan from a relaxation solution that uses one segment per period.
  const auto plan_from_lp = [&](const std::vector<Column>& cols, const Eigen::VectorXd& x, const Weights& w) {
    std::vector<Choice> choice(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) choice[static_cast<std::size_t>(t)].segment = w[static_cast<std::size_t>(t)].front().first;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      auto& c = choice[static_cast<std::size_t>(cols[j].t)];
      if (cols[j].segment == c.segment) c.x += x[static_cast<Eigen::Index>(j)] * cols[j].x;
    }
    for (Eigen::Index t = 0; t < T; ++t) {
      auto& c = choice[static_cast<std::size_t>(t)];
      const Segment& seg = segments[static_cast<std::size_t>(t)][static_cast<std::size_t>(c.segment)];
      c.x = std::clamp(c.x, seg.lo, seg.hi);
    }
    return plan_from_choices(inst, segments, choice, x[static_cast<Eigen::Index>(cols.size())] * cost_scale);
  };

  std::vector<Column> columns;
  for (Eigen::Index t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < segments[static_cast<std::size_t>(t)].size(); ++k) add_ends(columns, t, static_cast<int>(k));
  }
  lp::LinearProgram relax = make_lp(columns);
  const double scaled_tol = tol / cost_scale;
  double best = incumbent.objective / cost_scale;

  // Rounding heuristic: the heaviest segment of every period, with volumes
  // and the CVaR threshold re-optimized.
  const auto try_rounding = [&](const Weights& w) {
    std::vector<Column> cols;
    for (Eigen::Index t = 0; t < T; ++t) {
      const auto& wt = w[static_cast<std::size_t>(t)];
      const auto heaviest = std::max_element(wt.begin(), wt.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
      add_ends(cols, t, heaviest->first);
    }
    const lp::Result res = lp::solve(make_lp(cols));
    if (res.status != lp::Status::Optimal) return;
    Solution candidate = plan_from_lp(cols, res.x, segment_weights(cols, res.x));
    if (candidate.objective < incumbent.objective) {
      incumbent = std::move(candidate);
      best = incumbent.objective / cost_scale;
    }
  };

  // Best-first branch and bound. A node restricts each period to a range of
  // segment indices; branching splits the range of the most fractional
  // period between its positive segments.
  struct Node {
    double bound;
    long id;
    std::vector<std::pair<int, int>> range;
  };
  const auto worse = [](const Node& a, const Node& b) {
    return a.bound != b.bound ? a.bound > b.bound : a.id < b.id;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  {
    Node root{-kInf, 0, {}};
    for (const auto& segs : segments) root.range.emplace_back(0, static_cast<int>(segs.size()) - 1);
    open.push(std::move(root));
  }
  long nodes = 0, next_id = 1;
  double lower = kInf;
  bool hit_limit = false;
  const Eigen::Index num_theta = static_cast<Eigen::Index>(columns.size());

  while (!open.empty()) {
    if (open.top().bound >= best - scaled_tol) break;
    if (nodes >= max_nodes) {
      hit_limit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    ++nodes;
    for (Eigen::Index j = 0; j < num_theta; ++j) {
      const auto& col = columns[static_cast<std::size_t>(j)];
      const auto [a, b] = node.range[static_cast<std::size_t>(col.t)];
      relax.upper[j] = col.segment >= a && col.segment <= b ? 1.0 : 0.0;
    }
    const lp::Result res = lp::solve(relax);
    if (res.status == lp::Status::Infeasible) continue;
    if (res.status != lp::Status::Optimal) {
      throw std::runtime_error("solve_instance: relaxation " + lp::to_string(res.status));
    }
    if (res.objective >= best - scaled_tol) {
      lower = std::min(lower, res.objective);
      continue;
    }
    const Weights w = segment_weights(columns, res.x);
    Eigen::Index branch_t = -1;
    double spread = 1e-7;
    for (Eigen::Index t = 0; t < T; ++t) {
      const auto& wt = w[static_cast<std::size_t>(t)];
      double heaviest = 0.0;
      for (const auto& [seg, v] : wt) heaviest = std::max(heaviest, v);
      if (wt.size() > 1 && 1.0 - heaviest > spread) {
        spread = 1.0 - heaviest;
        branch_t = t;
      }
    }
    if (branch_t < 0) {
      Solution candidate = plan_from_lp(columns, res.x, w);
      if (candidate.objective < incumbent.objective) {
        incumbent = std::move(candidate);
        best = incumbent.objective / cost_scale;
      }
      continue;
    }
    try_rounding(w);
    if (res.objective >= best - scaled_tol) {
      lower = std::min(lower, res.objective);
      continue;
    }
    const auto& wt = w[static_cast<std::size_t>(branch_t)];
    std::size_t split = 0;
    double cum = 0.0, closest = kInf;
    for (std::size_t i = 0; i + 1 < wt.size(); ++i) {
      cum += wt[i].second;
      if (std::abs(cum - 0.5) < closest) {
        closest = std::abs(cum - 0.5);
        split = i;
      }
    }
    Node left{res.objective, next_id++, node.range};
    Node right{res.objective, next_id++, std::move(node.range)};
    left.range[static_cast<std::size_t>(branch_t)].second = wt[split].first;
    right.range[static_cast<std::size_t>(branch_t)].first = wt[split + 1].first;
    open.push(std::move(left));
    open.push(std::move(right));
  }

  if (!open.empty()) lower = std::min(lower, open.top().bound);
  incumbent.nodes = nodes;
  incumbent.status = hit_limit ? "node_limit" : "optimal";
  incumbent.gap = incumbent.objective - std::min(incumbent.objective, lower * cost_scale);
  return incumbent;
}

// -- brute force ----------------------------------------------------------------

namespace {

// One SOS1-feasible level choice for a period: the volume interval it allows
// and the scenario costs as slope * x + intercept.
struct Assignment {
  double lo, hi;
  int b;
  std::vector<int> f;
  Eigen::VectorXd slope, intercept;
};

std::vector<Assignment> enumerate_assignments(const ProcurementInstance& inst, Eigen::Index t) {
  const auto S = inst.num_scenarios();
  const PriceCurve& da = inst.da_curve;
  double combos = static_cast<double>(da.size());
  for (Eigen::Index s = 0; s < S; ++s) combos *= static_cast<double>(inst.bal_curve(s).size());
  if (combos > 1e6) throw std::invalid_argument("brute_force_oracle: instance too large");

  std::vector<Assignment> out;
  std::vector<int> f(static_cast<std::size_t>(S), 0);
  for (int b = 0; b < da.size(); ++b) {
    std::fill(f.begin(), f.end(), 0);
    for (;;) {
      const double base = inst.exogenous.d_sys_base[t];
      double lo = std::max(inst.da_min[t], da.levels[b] - 0.5 * da.delta - base);
      double hi = std::min(inst.da_max[t], da.levels[b] + 0.5 * da.delta - base);
      Assignment a{0, 0, b, f, Eigen::VectorXd(S), Eigen::VectorXd(S)};
      for (Eigen::Index s = 0; s < S && lo <= hi; ++s) {
        const PriceCurve& bal = inst.bal_curve(s);
        const int fs = f[static_cast<std::size_t>(s)];
        const double need = inst.d_fore[t] + inst.scenarios.errors(s, t);
        const double imb = inst.exogenous.d_imb_base(s, t);
        // imbalance = imb + need - x within delta/2 of the level; bounds on need - x.
        lo = std::max({lo, imb + need - bal.levels[fs] - 0.5 * bal.delta, need - inst.bal_max(s, t)});
        hi = std::min({hi, imb + need - bal.levels[fs] + 0.5 * bal.delta, need - inst.bal_min(s, t)});
        a.slope[s] = da.prices[b] - bal.prices[fs];
        a.intercept[s] = bal.prices[fs] * need;
      }
      if (lo <= hi + 1e-12 * std::max(1.0, std::abs(hi))) {
        a.lo = lo;
        a.hi = std::max(lo, hi);
        out.push_back(std::move(a));
      }
      Eigen::Index s = 0;
      for (; s < S; ++s) {
        auto& fs = f[static_cast<std::size_t>(s)];
        if (++fs < inst.bal_curve(s).size()) break;
        fs = 0;
      }
      if (s == S) break;
    }
  }
  return out;
}

}  // namespace

Solution brute_force_oracle(const ProcurementInstance& inst, int grid_points) {
  inst.validate();
  const auto T = inst.periods();
  const auto S = inst.num_scenarios();
  const Eigen::VectorXd& prob = inst.scenarios.probabilities;

  std::vector<std::vector<Assignment>> options;
  double joint = 1.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    options.push_back(enumerate_assignments(inst, t));
    joint *= static_cast<double>(options.back().size());
  }
  const int grid = std::max(2, grid_points);
  if (joint == 0.0) {
    Solution sol = empty_solution(inst);
    sol.status = "infeasible";
    return sol;
  }
  if (joint * std::pow(static_cast<double>(grid), static_cast<double>(T)) > 5e7) {
    throw std::invalid_argument("brute_force_oracle: instance too large");
  }

  // Pairs of scenarios whose equal-cost hyperplanes can define a vertex.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index a = 0; a < S; ++a)
    for (Eigen::Index b = a + 1; b < S; ++b) pairs.emplace_back(a, b);

  double best = kInf;
  std::vector<int> best_pick;
  Eigen::VectorXd best_x;
  std::vector<int> pick(static_cast<std::size_t>(T), 0);
  Eigen::VectorXd x(T);

  auto evaluate = [&](const Eigen::VectorXd& xs) {
    Eigen::VectorXd costs = Eigen::VectorXd::Zero(S);
    for (Eigen::Index t = 0; t < T; ++t) {
      const Assignment& a = options[static_cast<std::size_t>(t)][static_cast<std::size_t>(pick[static_cast<std::size_t>(t)])];
      costs += a.slope * xs[t] + a.intercept;
    }
    const double value = prob.dot(costs) + inst.beta * cvar_of_costs(costs, prob, inst.alpha);
    if (value < best) {
      best = value;
      best_pick = pick;
      best_x = xs;
    }
  };

  for (;;) {
    // Grid over every period's interval (ends included).
    std::vector<int> g(static_cast<std::size_t>(T), 0);
    for (;;) {
      for (Eigen::Index t = 0; t < T; ++t) {
        const Assignment& a = options[static_cast<std::size_t>(t)][static_cast<std::size_t>(pick[static_cast<std::size_t>(t)])];
        x[t] = a.lo + (a.hi - a.lo) * g[static_cast<std::size_t>(t)] / (grid - 1);
      }
      evaluate(x);
      Eigen::Index t = 0;
      for (; t < T; ++t) {
        if (++g[static_cast<std::size_t>(t)] < grid) break;
        g[static_cast<std::size_t>(t)] = 0;
      }
      if (t == T) break;
    }
    // Vertices where k free periods satisfy k equal-cost conditions.
    if (inst.beta > 0.0) {
      for (unsigned mask = 1; mask < (1u << T); ++mask) {
        std::vector<Eigen::Index> free_t;
        for (Eigen::Index t = 0; t < T; ++t)
          if (mask & (1u << t)) free_t.push_back(t);
        const auto k = static_cast<Eigen::Index>(free_t.size());
        if (k > static_cast<Eigen::Index>(pairs.size())) continue;
        // Choose k scenario pairs (lexicographic combinations).
        std::vector<std::size_t> comb(static_cast<std::size_t>(k));
        std::iota(comb.begin(), comb.end(), std::size_t{0});
        for (;;) {
          for (unsigned corner = 0; corner < (1u << T); ++corner) {
            if (corner & mask) continue;
            Eigen::MatrixXd A(k, k);
            Eigen::VectorXd rhs(k);
            for (Eigen::Index r = 0; r < k; ++r) {
              const auto [p, q] = pairs[comb[static_cast<std::size_t>(r)]];
              double constant = 0.0;
              for (Eigen::Index t = 0; t < T; ++t) {
                const Assignment& a = options[static_cast<std::size_t>(t)][static_cast<std::size_t>(pick[static_cast<std::size_t>(t)])];
                constant += a.intercept[p] - a.intercept[q];
                if (!(mask & (1u << t))) {
                  const double xt = (corner & (1u << t)) ? a.hi : a.lo;
                  constant += (a.slope[p] - a.slope[q]) * xt;
                }
              }
              for (Eigen::Index c = 0; c < k; ++c) {
                const Assignment& a = options[static_cast<std::size_t>(free_t[static_cast<std::size_t>(c)])]
                                             [static_cast<std::size_t>(pick[static_cast<std::size_t>(free_t[static_cast<std::size_t>(c)])])];
                A(r, c) = a.slope[p] - a.slope[q];
              }
              rhs[r] = -constant;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (lu.rank() == k) {
              const Eigen::VectorXd sol = lu.solve(rhs);
              bool inside = true;
              for (Eigen::Index t = 0; t < T; ++t) {
                const Assignment& a = options[static_cast<std::size_t>(t)][static_cast<std::size_t>(pick[static_cast<std::size_t>(t)])];
                if (mask & (1u << t)) {
                  const auto c = std::find(free_t.begin(), free_t.end(), t) - free_t.begin();
                  x[t] = sol[c];
                  const double slack = 1e-12 * std::max(1.0, std::abs(x[t]));
                  if (x[t] < a.lo - slack || x[t] > a.hi + slack) inside = false;
                  x[t] = std::clamp(x[t], a.lo, a.hi);
                } else {
                  x[t] = (corner & (1u << t)) ? a.hi : a.lo;
                }
              }
              if (inside) evaluate(x);
            }
          }
          // next combination
          Eigen::Index i = k - 1;
          while (i >= 0 && comb[static_cast<std::size_t>(i)] == pairs.size() - static_cast<std::size_t>(k - i)) --i;
          if (i < 0) break;
          ++comb[static_cast<std::size_t>(i)];
          for (Eigen::Index r = i + 1; r < k; ++r) comb[static_cast<std::size_t>(r)] = comb[static_cast<std::size_t>(r - 1)] + 1;
        }
      }
    }
    Eigen::Index t = 0;
    for (; t < T; ++t) {
      if (++pick[static_cast<std::size_t>(t)] < static_cast<int>(options[static_cast<std::size_t>(t)].size())) break;
      pick[static_cast<std::size_t>(t)] = 0;
    }
    if (t == T) break;
  }

  Solution sol = empty_solution(inst);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Assignment& a = options[static_cast<std::size_t>(t)][static_cast<std::size_t>(best_pick[static_cast<std::size_t>(t)])];
    sol.d_da[t] = best_x[t];
    sol.u_da[static_cast<std::size_t>(t)] = a.b;
    sol.price_da[t] = inst.da_curve.prices[a.b];
    for (Eigen::Index s = 0; s < S; ++s) {
      sol.d_bal(s, t) = inst.d_fore[t] + inst.scenarios.errors(s, t) - best_x[t];
      sol.u_bal(s, t) = a.f[static_cast<std::size_t>(s)];
      sol.price_bal(s, t) = inst.bal_curve(s).prices[a.f[static_cast<std::size_t>(s)]];
    }
  }
  sol.zeta = 0.0;
  sol = finish_plan(inst, std::move(sol));
  sol.zeta = var_of_costs(sol.scenario_costs, prob, inst.alpha);
  sol.eta = (sol.scenario_costs.array() - sol.zeta).cwiseMax(0.0).matrix();
  sol.objective = sol.expected_cost + inst.beta * sol.cvar;
  sol.status = "optimal";
  return sol;
}

// -- risk measures ------------------------------------------------------------

double cvar_of_costs(const Eigen::Ref<const Eigen::VectorXd>& costs,
                     const Eigen::Ref<const Eigen::VectorXd>& probs, double alpha) {
  const auto n = costs.size();
  if (n == 0 || probs.size() != n) throw std::invalid_argument("cvar_of_costs: size mismatch");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("cvar_of_costs: alpha must lie in (0, 1)");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return costs[a] < costs[b]; });
  // Walking from the largest cost down: mass and first moment above z.
  double best = kInf;
  double mass = 0.0, moment = 0.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const double z = costs[*it];
    const double value = z + (moment - mass * z) / (1.0 - alpha);
    best = std::min(best, value);
    mass += probs[*it];
    moment += probs[*it] * costs[*it];
  }
  return best;
}

double var_of_costs(const Eigen::Ref<const Eigen::VectorXd>& costs,
                    const Eigen::Ref<const Eigen::VectorXd>& probs, double alpha) {
  const auto n = costs.size();
  if (n == 0 || probs.size() != n) throw std::invalid_argument("var_of_costs: size mismatch");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return costs[a] < costs[b]; });
  double mass = 0.0;
  for (auto i : order) {
    mass += probs[i];
    if (mass >= alpha - 1e-12) return costs[i];
  }
  return costs[order.back()];
}

Eigen::VectorXd plan_scenario_costs(const ProcurementInstance& inst, const Solution& plan) {
  Eigen::VectorXd costs(inst.num_scenarios());
  const double da = plan.price_da.dot(plan.d_da);
  for (Eigen::Index s = 0; s < inst.num_scenarios(); ++s) {
    costs[s] = da + plan.price_bal.row(s).dot(plan.d_bal.row(s));
  }
  return costs;
}

// -- files ------------------------------------------------------------------------

namespace {

using nlohmann::json;

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Eigen::VectorXd row = m.row(r).transpose();
    rows.push_back(to_json(row));
  }
  return rows;
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw std::invalid_argument("instance: ragged matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

json curve_json(const PriceCurve& c) {
  return {{"levels", to_json(c.levels)}, {"prices", to_json(c.prices)}, {"delta", c.delta}};
}

PriceCurve curve_from(const json& j) {
  return make_curve(vector_from(j.at("levels")), vector_from(j.at("prices")), j.at("delta").get<double>());
}

}  // namespace

void write_instance_json(const ProcurementInstance& inst, const std::filesystem::path& path) {
  json j;
  j["format"] = "smval-procurement-1";
  j["beta"] = inst.beta;
  j["alpha"] = inst.alpha;
  j["d_fore"] = to_json(inst.d_fore);
  j["scenarios"] = {{"start", inst.scenarios.start},
                    {"errors", to_json(inst.scenarios.errors)},
                    {"probabilities", to_json(inst.scenarios.probabilities)}};
  j["da_curve"] = curve_json(inst.da_curve);
  j["bal_curves"] = json::array();
  for (const auto& c : inst.bal_curves) j["bal_curves"].push_back(curve_json(c));
  j["exogenous"] = {{"d_sys_base", to_json(inst.exogenous.d_sys_base)},
                    {"d_imb_base", to_json(inst.exogenous.d_imb_base)}};
  j["bounds"] = {{"da_min", to_json(inst.da_min)},
                 {"da_max", to_json(inst.da_max)},
                 {"bal_min", to_json(inst.bal_min)},
                 {"bal_max", to_json(inst.bal_max)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

ProcurementInstance read_instance_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const json j = json::parse(in);
  if (j.value("format", "") != "smval-procurement-1") {
    throw std::invalid_argument(path.string() + ": not a smval-procurement-1 file");
  }
  ProcurementInstance inst;
  inst.beta = j.value("beta", 0.0);
  inst.alpha = j.value("alpha", 0.95);
  inst.d_fore = vector_from(j.at("d_fore"));
  const auto& sc = j.at("scenarios");
  inst.scenarios.start = sc.value("start", 0LL);
  inst.scenarios.errors = matrix_from(sc.at("errors"));
  inst.scenarios.probabilities = vector_from(sc.at("probabilities"));
  inst.da_curve = curve_from(j.at("da_curve"));
  for (const auto& c : j.at("bal_curves")) inst.bal_curves.push_back(curve_from(c));
  inst.exogenous.d_sys_base = vector_from(j.at("exogenous").at("d_sys_base"));
  inst.exogenous.d_imb_base = matrix_from(j.at("exogenous").at("d_imb_base"));
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    inst.da_min = vector_from(b.at("da_min"));
    inst.da_max = vector_from(b.at("da_max"));
    inst.bal_min = matrix_from(b.at("bal_min"));
    inst.bal_max = matrix_from(b.at("bal_max"));
  } else {
    set_default_bounds(inst);
  }
  inst.validate();
  return inst;
}

void write_solution_csv(const Solution& sol, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    csv::Writer out(dir / "solution_da.csv", "t,d_da_mwh,price_da");
    for (Eigen::Index t = 0; t < sol.d_da.size(); ++t) {
      out.row(static_cast<long long>(t), sol.d_da[t], sol.price_da[t]);
    }
    out.close();
  }
  {
    csv::Writer out(dir / "solution_bal.csv", "s,t,d_bal_mwh,price_bal");
    for (Eigen::Index s = 0; s < sol.d_bal.rows(); ++s) {
      for (Eigen::Index t = 0; t < sol.d_bal.cols(); ++t) {
        out.row(static_cast<long long>(s), static_cast<long long>(t), sol.d_bal(s, t), sol.price_bal(s, t));
      }
    }
    out.close();
  }
  csv::Writer out(dir / "solution_summary.csv", "status,objective,expected_cost,cvar,zeta,gap,nodes");
  out.row(sol.status, sol.objective, sol.expected_cost, sol.cvar, sol.zeta, sol.gap, sol.nodes);
  out.close();
}

}  // namespace smval
