// Acceptance suite: one PASS/FAIL line per criterion, also written to
// acceptance_report.txt in the working directory. Tolerances and sample sizes
// are fixed below. Exits non-zero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "smval/experiment.hpp"
#include "smval/forecast.hpp"
#include "smval/metrics.hpp"
#include "smval/privacy.hpp"
#include "smval/procurement.hpp"
#include "smval/random.hpp"
#include "smval/scenario.hpp"
#include "smval/synth.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace smval;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// C1
constexpr int kDpSamples = 1'000'000;
constexpr int kDpBins = 50;
constexpr double kDpRangeInB = 10.0;
constexpr int kDpMinCount = 1000;
constexpr double kDpSlack = 0.1;
constexpr double kDpTimeLimit = 120.0;
// C3
constexpr int kKsSamples = 100'000;
constexpr int kKsMeters = 100;
constexpr double kKsThreshold = 0.01;
constexpr double kKsTimeLimit = 60.0;
// C4
constexpr double kKldTol = 1e-9;
// C5
constexpr double kGradTol = 1e-4;
constexpr int kGradMinCoordinates = 100;
// C6
constexpr int kOracleInstances = 20;
constexpr double kOracleTol = 1e-5;
constexpr double kResidualTol = 1e-9;
constexpr double kOracleTimeLimit = 300.0;
// C7
constexpr int kCvarVectors = 100;
constexpr double kCvarTol = 1e-9;
// C8
constexpr double kMonotoneTol = 1e-6;
// C9 - C12
constexpr int kSeeds = 20;
constexpr int kMixtureGroups = 30;
constexpr int kMixtureSize = 40;
constexpr double kSpearmanThreshold = 0.5;
// C13
constexpr double kDeskTimeLimit = 900.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << v;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// C1: empirical epsilon-indistinguishability of privatize_aggregate.

struct HistogramCheck {
  double worst = 0.0;
  int bins_used = 0;
};

HistogramCheck histogram_log_ratio(const MeterPanel& a, const MeterPanel& b,
                                   const PrivacyParams& params, std::uint64_t seed) {
  const double scale = noise_scale(global_sensitivity(a), params).b[0];
  const double centre = aggregate_panel(a).values[0];
  const double lo = centre - kDpRangeInB * scale, width = 2.0 * kDpRangeInB * scale / kDpBins;
  std::vector<long> ca(kDpBins, 0), cb(kDpBins, 0);
  const auto fill = [&](const MeterPanel& panel, std::vector<long>& counts, std::uint64_t tag) {
    for (int i = 0; i < kDpSamples; ++i) {
      const double x = privatize_aggregate(panel, params, derive_seed(seed + tag, static_cast<std::uint64_t>(i))).values[0];
      const auto k = static_cast<long>(std::floor((x - lo) / width));
      if (k >= 0 && k < kDpBins) ++counts[static_cast<std::size_t>(k)];
    }
  };
  fill(a, ca, 0);
  fill(b, cb, 1);
  HistogramCheck out;
  for (int k = 0; k < kDpBins; ++k) {
    if (ca[static_cast<std::size_t>(k)] < kDpMinCount || cb[static_cast<std::size_t>(k)] < kDpMinCount) continue;
    ++out.bins_used;
    out.worst = std::max(out.worst, std::abs(std::log(static_cast<double>(ca[static_cast<std::size_t>(k)]) /
                                                      static_cast<double>(cb[static_cast<std::size_t>(k)]))));
  }
  return out;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  // Smallest panel whose middle meter can move by the full range while the
  // minimum and maximum, and therefore the noise scale, stay put.
  const MeterPanel a({"lo", "mid", "hi"}, 0, Eigen::Vector3d(0.0, 0.0, 1.0));
  const MeterPanel b({"lo", "mid", "hi"}, 0, Eigen::Vector3d(0.0, 1.0, 1.0));
  bool pass = true;
  std::ostringstream d;
  for (double eps : {0.25, 1.0}) {
    const HistogramCheck h = histogram_log_ratio(a, b, PrivacyParams(eps, 0.0), 11);
    pass = pass && h.bins_used > 0 && h.worst <= eps + kDpSlack;
    d << "eps=" << eps << " gamma=0 max|log ratio|=" << fmt(h.worst, 4) << " (bound " << eps + kDpSlack
      << ", " << h.bins_used << " bins); ";
  }
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < kDpTimeLimit;
  d << "time " << fmt(elapsed, 3) << "s";
  return {pass, d.str()};
}

// Informational companion to C1: the same test at gamma = 0.75 and with a
// noise scale calibrated to the sum query (range instead of range / N).
std::string criterion1_context() {
  const MeterPanel a({"lo", "mid", "hi"}, 0, Eigen::Vector3d(0.0, 0.0, 1.0));
  const MeterPanel b({"lo", "mid", "hi"}, 0, Eigen::Vector3d(0.0, 1.0, 1.0));
  std::ostringstream d;
  for (double eps : {0.25, 1.0}) {
    const HistogramCheck h = histogram_log_ratio(a, b, PrivacyParams(eps, 0.75), 12);
    d << "gamma=0.75 eps=" << eps << ": " << fmt(h.worst, 4) << "; ";
  }
  for (double eps : {0.25, 1.0}) {
    // Scaling epsilon by 1/N reproduces b = range / eps for N = 3.
    const HistogramCheck h = histogram_log_ratio(a, b, PrivacyParams(eps / 3.0, 0.0), 13);
    d << "sum-calibrated eps=" << eps << ": " << fmt(h.worst, 4) << "; ";
  }
  return d.str();
}

// ---------------------------------------------------------------------------

Outcome criterion2() {
  bool pass = true;
  std::ostringstream d;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double df = u(rng), eps = 0.01 + u(rng);
    pass = pass && noise_scale(df, PrivacyParams(eps, 0.0)) == df / eps;
  }
  const double b = noise_scale(1.0, PrivacyParams(0.25, 0.75));
  pass = pass && b == 16.0;
  d << "gamma=0 equals delta_f/eps bitwise on 1000 draws; b(0.25, 0.75, 1) = " << fmt(b, 17);
  return {pass, d.str()};
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const double b = 2.0;
  std::vector<double> sums(kKsSamples);
  for (int i = 0; i < kKsSamples; ++i) {
    sums[static_cast<std::size_t>(i)] = gamma_noise_share(b, kKsMeters, derive_seed(31, static_cast<std::uint64_t>(i))).sum();
  }
  const double ks = testing::ks_distance(sums, testing::direct_laplace(b, kKsSamples, 32));
  const double elapsed = seconds_since(t0);
  return {ks < kKsThreshold && elapsed < kKsTimeLimit,
          "KS=" + fmt(ks, 4) + " (threshold " + fmt(kKsThreshold) + "), time " + fmt(elapsed, 3) + "s"};
}

Outcome criterion4() {
  const auto profile = [](double mu, double sigma) {
    return DlcProfile{Eigen::VectorXd::Constant(kPeriodsPerWeek, mu), Eigen::VectorXd::Constant(kPeriodsPerWeek, sigma)};
  };
  const DlcProfile base = profile(1.0 / kPeriodsPerWeek, 0.001);
  const double k0 = kld_profiles(base, base);
  DlcProfile c = profile(0.0, 1.0), s = profile(0.0, 1.0);
  c.mu[5] = 1.0;
  const double k1 = kld_profiles(c, s);
  DlcProfile c2 = profile(0.0, 1.0), s2 = profile(0.0, 1.0);
  s2.sigma[7] = 2.0;
  const double k2 = kld_profiles(c2, s2);
  const double expected2 = std::log(2.0) + 0.125 - 0.5;
  const bool pass = std::abs(k0) <= kKldTol && std::abs(k1 - 0.5) <= kKldTol && std::abs(k2 - expected2) <= kKldTol &&
                    std::abs(k2 - 0.318147) < 1e-6;
  return {pass, "identical=" + fmt(k0, 12) + " shifted=" + fmt(k1, 12) + " scaled=" + fmt(k2, 12)};
}

Outcome criterion5() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  int coords = 0;
  double worst = 0.0;
  for (int point = 0; point < 3; ++point) {
    MlpModel m(8, kHiddenUnits);
    Eigen::VectorXd p(m.num_parameters());
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = 0.5 * n(rng);
    m.set_parameters(p);
    Eigen::MatrixXd z(32, 8);
    Eigen::VectorXd y(32);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = n(rng);
    const Eigen::VectorXd g = mlp_gradient(m, z, y);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[i]));
      MlpModel up = m, down = m;
      Eigen::VectorXd pu = p, pd = p;
      pu[i] += h;
      pd[i] -= h;
      up.set_parameters(pu);
      down.set_parameters(pd);
      const double fd = (mlp_loss(up, z, y) - mlp_loss(down, z, y)) / (2.0 * h);
      worst = std::max(worst, std::abs(g[i] - fd) / std::max({1e-8, std::abs(g[i]), std::abs(fd)}));
      ++coords;
    }
  }
  return {coords >= kGradMinCoordinates && worst < kGradTol,
          std::to_string(coords) + " coordinates, max relative error " + fmt(worst, 3)};
}

// ---------------------------------------------------------------------------

Solution refined_oracle(const ProcurementInstance& inst, int* grid_used) {
  for (int grid : {41, 21, 11, 5}) {
    try {
      Solution s = brute_force_oracle(inst, grid);
      *grid_used = grid;
      return s;
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::runtime_error("oracle refuses the instance at every grid");
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(6);
  double worst_gap = 0.0, worst_residual = 0.0;
  int agree = 0, min_grid = 1000;
  for (int i = 0; i < kOracleInstances; ++i) {
    const int T = 1 + static_cast<int>(rng() % 3);
    const int S = 1 + static_cast<int>(rng() % 2);
    const int B = 2 + static_cast<int>(rng() % 2);
    const int F = 2 + static_cast<int>(rng() % 2);
    const double beta = std::array<double, 3>{0.0, 0.5, 3.0}[rng() % 3];
    const ProcurementInstance inst = testing::random_instance(600 + static_cast<std::uint64_t>(i), T, S, B, F, beta);
    const Solution milp = solve(build_milp(inst));
    int grid = 0;
    const Solution coarse = brute_force_oracle(inst, 5);
    const Solution fine = refined_oracle(inst, &grid);
    min_grid = std::min(min_grid, grid);
    const double gap = std::abs(milp.objective - fine.objective);
    worst_gap = std::max(worst_gap, gap);
    worst_residual = std::max(worst_residual, milp.linearization_residual);
    // Refining the grid must not raise the oracle value.
    if (milp.status == "optimal" && gap <= kOracleTol && fine.objective <= coarse.objective + 1e-12) ++agree;
  }
  const double elapsed = seconds_since(t0);
  const bool pass = agree == kOracleInstances && worst_residual < kResidualTol && elapsed < kOracleTimeLimit;
  return {pass, std::to_string(agree) + "/" + std::to_string(kOracleInstances) + " agree, max |gap| " +
                    fmt(worst_gap, 3) + ", max residual " + fmt(worst_residual, 3) + ", finest common grid " +
                    std::to_string(min_grid) + ", time " + fmt(elapsed, 3) + "s"};
}

// The fixed desk instance used by C7 and C8: twelve evening periods of the
// synthetic system, twenty scenarios and the synthetic market.
ProcurementInstance desk_instance() {
  SynthConfig sc;
  const MeterPanel panel = generate_panel(sc);
  const DlcProfile sys = compute_dlc(panel);
  const SchemeForecast fc = forecast_scheme(HhsEhh{}, panel, sys, TrainConfig{}, 8);
  const LoadSeries evening("evening", fc.forecast.start + 32, fc.forecast.values.segment(32, 12));
  const double w = wape(fc.backtest_actual, fc.backtest_forecast);
  ProcurementInstance inst;
  inst.d_fore = evening.values * 1e-3;
  inst.scenarios = generate_scenarios(evening, w, 20, 9);
  inst.scenarios.errors *= 1e-3;
  inst.alpha = 0.95;
  set_default_bounds(inst);
  const double bound = inst.da_max.maxCoeff();
  const Market m = synthetic_market(inst.d_fore, 20, -bound, bound, MarketParams{}, 10);
  inst.da_curve = m.da_curve;
  inst.bal_curves = m.bal_curves;
  inst.exogenous = m.exogenous;
  return inst;
}

Outcome criterion7(const ProcurementInstance& desk) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < kCvarVectors; ++i) {
    const int n = 1 + static_cast<int>(rng() % 40);
    Eigen::VectorXd c(n), p(n);
    for (int k = 0; k < n; ++k) {
      c[k] = (i % 2 ? std::round(20 * u(rng)) : 100 * u(rng)) - 10.0;
      p[k] = 0.05 + u(rng);
    }
    p /= p.sum();
    const double alpha = 0.01 + 0.98 * u(rng);
    worst = std::max(worst, std::abs(cvar_of_costs(c, p, alpha) - testing::tail_average_cvar(c, p, alpha)));
  }
  // Optimizer zeta against the alpha-quantile of its own scenario costs.
  int zeta_ok = 0, zeta_total = 0;
  std::ostringstream zd;
  std::vector<ProcurementInstance> cases;
  for (double beta : {0.5, 1.0, 5.0}) {
    ProcurementInstance inst = desk;
    inst.beta = beta;
    cases.push_back(inst);
  }
  for (int i = 0; i < 5; ++i) cases.push_back(testing::random_instance(700 + static_cast<std::uint64_t>(i), 3, 6, 4, 4, 2.0));
  for (const auto& inst : cases) {
    const Solution sol = solve_instance(inst);
    const Eigen::VectorXd& costs = sol.scenario_costs;
    std::vector<double> sorted(costs.data(), costs.data() + costs.size());
    std::sort(sorted.begin(), sorted.end());
    const double q = var_of_costs(costs, inst.scenarios.probabilities, inst.alpha);
    const auto k = std::lower_bound(sorted.begin(), sorted.end(), q) - sorted.begin();
    const double below = k > 0 ? sorted[static_cast<std::size_t>(k - 1)] : q;
    const double above = static_cast<std::size_t>(k + 1) < sorted.size() ? sorted[static_cast<std::size_t>(k + 1)] : q;
    const double slack = 1e-9 * std::max(1.0, std::abs(q));
    ++zeta_total;
    if (sol.zeta >= below - slack && sol.zeta <= above + slack) ++zeta_ok;
  }
  const bool pass = worst <= kCvarTol && zeta_ok == zeta_total;
  return {pass, "max |cvar - tail average| " + fmt(worst, 3) + " over " + std::to_string(kCvarVectors) +
                    " vectors; zeta within one gap of VaR in " + std::to_string(zeta_ok) + "/" +
                    std::to_string(zeta_total) + " solves"};
}

Outcome criterion8(const ProcurementInstance& desk) {
  bool pass = true;
  std::ostringstream d;
  double prev_mean = -kInf, prev_cvar = kInf;
  for (double beta : {0.0, 0.5, 1.0, 5.0}) {
    ProcurementInstance inst = desk;
    inst.beta = beta;
    const auto t0 = std::chrono::steady_clock::now();
    const Solution sol = solve_instance(inst);
    const double tol = kMonotoneTol * std::max(1.0, std::abs(sol.expected_cost));
    pass = pass && sol.status == "optimal" && sol.expected_cost >= prev_mean - tol && sol.cvar <= prev_cvar + tol;
    d << "beta=" << beta << ": E=" << fmt(sol.expected_cost, 8) << " CVaR=" << fmt(sol.cvar, 8) << " ("
      << sol.nodes << " nodes, " << fmt(seconds_since(t0), 3) << "s); ";
    prev_mean = sol.expected_cost;
    prev_cvar = sol.cvar;
  }
  return {pass, d.str()};
}

// ---------------------------------------------------------------------------
// C9, C11, C12: the desk-scale high-KLD group over many seeds.

struct SeedRuns {
  std::vector<double> wape_eps;  // epsilon = inf, 1, 0.5, 0.25 at gamma 0.75
  double wape_ehh = 0.0, wape_dlcsys = 0.0;
  double cost_ehh = 0.0, cost_ddp = 0.0, cost_dlcsys = 0.0;
  double cvar_ehh = 0.0, cvar_ddp = 0.0, cvar_dlcsys = 0.0;
  bool hetero_exact = true;
};

const std::array<double, 4> kEpsilons{kInf, 1.0, 0.5, 0.25};

std::vector<SeedRuns> high_kld_runs(const ExperimentConfig& cfg, const MeterPanel& panel, std::string* group_note) {
  std::vector<SeedRuns> out;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const CellContext ctx = make_context(cfg, panel, "highest_kld", static_cast<std::uint64_t>(seed));
    if (seed == 1) {
      *group_note = "group " + ctx.group + " (" + std::to_string(ctx.group_panel.num_meters()) +
                    " meters, KLD " + fmt(ctx.kld, 4) + ")";
    }
    SeedRuns r;
    for (double eps : kEpsilons) {
      r.wape_eps.push_back(run_scheme(cfg, ctx, HhsDdp{PrivacyParams(eps, 0.75)}).wape);
    }
    const SchemeResult ehh = run_scheme(cfg, ctx, HhsEhh{});
    const SchemeResult dlc = run_scheme(cfg, ctx, HhsDlcSys{});
    const PrivacyParams headline(0.25, 0.75);
    const SchemeResult ddp = run_scheme(cfg, ctx, HhsDdp{headline});
    r.wape_ehh = ehh.wape;
    r.wape_dlcsys = dlc.wape;
    r.cost_ehh = ehh.expected_cost;
    r.cost_ddp = ddp.expected_cost;
    r.cost_dlcsys = dlc.expected_cost;
    r.cvar_ehh = ehh.cvar;
    r.cvar_ddp = ddp.cvar;
    r.cvar_dlcsys = dlc.cvar;
    if (seed <= 5) {
      const SchemeResult p0 = run_hetero(cfg, ctx, 0.0, headline);
      const SchemeResult p1 = run_hetero(cfg, ctx, 1.0, headline);
      r.hetero_exact = p0.expected_cost == ehh.expected_cost && p0.cvar == ehh.cvar && p0.wape == ehh.wape &&
                       p1.expected_cost == ddp.expected_cost && p1.cvar == ddp.cvar && p1.wape == ddp.wape &&
                       p0.omega_exp == ehh.expected_cost && p1.omega_exp == ddp.expected_cost;
    }
    out.push_back(r);
  }
  return out;
}

template <typename F>
double mean_of(const std::vector<SeedRuns>& runs, F f) {
  double s = 0.0;
  for (const auto& r : runs) s += f(r);
  return s / static_cast<double>(runs.size());
}

Outcome criterion9(const std::vector<SeedRuns>& runs, const std::string& note) {
  std::vector<double> means;
  for (std::size_t k = 0; k < kEpsilons.size(); ++k) means.push_back(mean_of(runs, [&](const SeedRuns& r) { return r.wape_eps[k]; }));
  bool monotone = true;
  for (std::size_t k = 1; k < means.size(); ++k) monotone = monotone && means[k] >= means[k - 1];
  const double ehh = mean_of(runs, [](const SeedRuns& r) { return r.wape_ehh; });
  const double dlc = mean_of(runs, [](const SeedRuns& r) { return r.wape_dlcsys; });
  std::ostringstream d;
  d << note << ", " << runs.size() << " seeds; mean WAPE eps=inf/1/0.5/0.25: ";
  for (double m : means) d << fmt(m, 6) << " ";
  d << "; DlcSys " << fmt(dlc, 6) << " vs Ehh " << fmt(ehh, 6);
  return {monotone && dlc > ehh, d.str()};
}

Outcome criterion11(const std::vector<SeedRuns>& runs) {
  const double ce = mean_of(runs, [](const SeedRuns& r) { return r.cost_ehh; });
  const double cd = mean_of(runs, [](const SeedRuns& r) { return r.cost_ddp; });
  const double cs = mean_of(runs, [](const SeedRuns& r) { return r.cost_dlcsys; });
  const double ve = mean_of(runs, [](const SeedRuns& r) { return r.cvar_ehh; });
  const double vs = mean_of(runs, [](const SeedRuns& r) { return r.cvar_dlcsys; });
  const double we = mean_of(runs, [](const SeedRuns& r) { return r.wape_ehh; });
  const double wd = mean_of(runs, [](const SeedRuns& r) { return r.wape_eps[3]; });
  const double ws = mean_of(runs, [](const SeedRuns& r) { return r.wape_dlcsys; });
  const auto elasticity = [&](double cost, double w) { return 100.0 * (cost / ce - 1.0) / (100.0 * (w - we)); };
  std::ostringstream d;
  d << "mean cost DlcSys " << fmt(cs, 6) << " >= DDP(0.25,0.75) " << fmt(cd, 6) << " >= Ehh " << fmt(ce, 6)
    << "; elasticity (% cost per WAPE point vs Ehh): DlcSys " << fmt(elasticity(cs, ws), 3) << ", DDP "
    << fmt(elasticity(cd, wd), 3) << "; CVaR elasticity DlcSys " << fmt(100.0 * (vs / ve - 1.0) / (100.0 * (ws - we)), 3);
  return {cs >= cd && cd >= ce, d.str()};
}

Outcome criterion12(const std::vector<SeedRuns>& runs) {
  int exact = 0, checked = 0;
  for (std::size_t i = 0; i < std::min<std::size_t>(5, runs.size()); ++i) {
    ++checked;
    exact += runs[i].hetero_exact;
  }
  return {exact == checked, "p=0 == Ehh and p=1 == DDP(0.25,0.75) bit-exactly in " + std::to_string(exact) + "/" +
                                std::to_string(checked) + " seeds"};
}

// C10: groups mixing the most and least divergent k-means clusters.
Outcome criterion10(const ExperimentConfig& cfg, const MeterPanel& panel) {
  const DlcProfile sys = compute_dlc(panel);
  const auto groups = kmeans_groups(panel, cfg.kmeans_k, derive_seed(cfg.synth.seed, "kmeans"));
  const auto& low = groups.front().rows;
  const auto& high = groups.back().rows;
  std::vector<double> klds, gains;
  std::mt19937_64 rng(10);
  for (int i = 0; i < kMixtureGroups; ++i) {
    const double w = static_cast<double>(i) / (kMixtureGroups - 1);
    auto take = [&](std::vector<Eigen::Index> pool, int n) {
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(static_cast<std::size_t>(std::min<int>(n, static_cast<int>(pool.size()))));
      return pool;
    };
    const int n_high = static_cast<int>(std::lround(w * kMixtureSize));
    std::vector<Eigen::Index> rows = take(high, n_high);
    const auto rest = take(low, kMixtureSize - static_cast<int>(rows.size()));
    rows.insert(rows.end(), rest.begin(), rest.end());
    const ConsumerGroup g = make_group(panel, rows, "mix", sys);
    const MeterPanel gp = panel.subset(g.rows);
    double gain = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
      gain += forecast_scheme(HhsDlcSys{}, gp, sys, cfg.train, seed).wape_backtest -
              forecast_scheme(HhsEhh{}, gp, sys, cfg.train, seed).wape_backtest;
    }
    klds.push_back(g.kld_vs_system);
    gains.push_back(gain / 3.0);
  }
  const double rho = testing::spearman(klds, gains);
  const auto [kmin, kmax] = std::minmax_element(klds.begin(), klds.end());
  return {rho > kSpearmanThreshold, std::to_string(kMixtureGroups) + " groups, KLD " + fmt(*kmin, 4) + ".." +
                                        fmt(*kmax, 4) + ", Spearman rho " + fmt(rho, 4)};
}

// ---------------------------------------------------------------------------
// C13: two CLI runs of the desk-scale experiment.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion13() {
  const char* cli = std::getenv("SMVAL_CLI");
  if (!cli) return {false, "SMVAL_CLI is not set"};
  const fs::path dir = fs::temp_directory_path() / "smval_acceptance_c13";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "desk.json") << R"({
  "synth": {"n_meters": 200, "n_weeks": 8},
  "groups": ["highest_kld", "lowest_kld"],
  "schemes": ["nhhs", "hhs_dlcsys", "hhs_ehh", "hhs_ddp"],
  "epsilons": [0.25, 1.0],
  "gammas": [0.75],
  "hetero_p": [0.0, 0.5, 1.0],
  "num_scenarios": 20,
  "seeds": [1, 2, 3]
})";
  std::vector<double> times;
  for (const char* run : {"run1", "run2"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string cmd = "cd '" + dir.string() + "' && '" + cli + "' --config desk.json --out " + run +
                            " experiment > " + run + ".log 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, std::string(run) + " failed: " + slurp(dir / (std::string(run) + ".log"))};
    times.push_back(seconds_since(t0));
  }
  int files = 0, identical = 0;
  for (const auto& entry : fs::directory_iterator(dir / "run1")) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    identical += slurp(entry.path()) == slurp(dir / "run2" / entry.path().filename());
  }
  const double slowest = std::max(times[0], times[1]);
  const bool pass = files > 0 && identical == files && slowest < kDeskTimeLimit;
  fs::remove_all(dir);
  return {pass, std::to_string(identical) + "/" + std::to_string(files) + " CSVs byte-identical; run times " +
                    fmt(times[0], 3) + "s, " + fmt(times[1], 3) + "s (limit " + fmt(kDeskTimeLimit) + "s)"};
}

}  // namespace

int main() {
  std::ofstream file("acceptance_report.txt");
  const auto emit = [&](const std::string& line) {
    std::cout << line << std::endl;
    file << line << std::endl;
  };
  int passed = 0, total = 0;
  const auto report = [&](const std::string& id, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    ++total;
    passed += o.pass;
    emit(id + " " + (o.pass ? "PASS" : "FAIL") + "  " + o.detail + "  [" + fmt(seconds_since(t0), 3) + "s]");
  };

  report("C1", criterion1);
  emit("   context: " + criterion1_context());
  report("C2", criterion2);
  report("C3", criterion3);
  report("C4", criterion4);
  report("C5", criterion5);
  report("C6", criterion6);
  const ProcurementInstance desk = desk_instance();
  report("C7", [&] { return criterion7(desk); });
  report("C8", [&] { return criterion8(desk); });

  const ExperimentConfig cfg;  // desk scale: 200 meters, 8 weeks, 20 scenarios
  const MeterPanel panel = experiment_panel(cfg);
  std::string note;
  std::vector<SeedRuns> runs;
  std::string runs_error;
  try {
    runs = high_kld_runs(cfg, panel, &note);
  } catch (const std::exception& e) {
    runs_error = e.what();
  }
  const auto need_runs = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (runs.empty()) return {false, "seed runs failed: " + runs_error};
      return fn();
    };
  };
  report("C9", need_runs([&] { return criterion9(runs, note); }));
  report("C10", [&] { return criterion10(cfg, panel); });
  report("C11", need_runs([&] { return criterion11(runs); }));
  report("C12", need_runs([&] { return criterion12(runs); }));
  report("C13", criterion13);

  emit("acceptance: " + std::to_string(passed) + "/" + std::to_string(total) + " criteria passed");
  return passed == total ? 0 : 1;
}
