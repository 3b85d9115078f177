// Command-line front end: one subcommand per pipeline stage plus the full
// experiment and its report.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "smval/csv.hpp"
#include "smval/experiment.hpp"
#include "smval/forecast.hpp"
#include "smval/market.hpp"
#include "smval/metrics.hpp"
#include "smval/privacy.hpp"
#include "smval/procurement.hpp"
#include "smval/random.hpp"
#include "smval/scenario.hpp"
#include "smval/scheme.hpp"
#include "smval/synth.hpp"

namespace fs = std::filesystem;
using namespace smval;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string config;
  std::string out = "out";
};

LoadSeries read_series_csv(const fs::path& path) {
  const auto rows = csv::read(path, "period_index,kwh");
  if (rows.empty()) throw std::invalid_argument(path.string() + ": empty series");
  Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
  const long long start = csv::to_int(rows.front()[0]);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 2 || csv::to_int(rows[i][0]) != start + static_cast<long long>(i)) {
      throw std::invalid_argument(path.string() + ": periods must be consecutive");
    }
    v[static_cast<Eigen::Index>(i)] = csv::to_double(rows[i][1]);
  }
  return LoadSeries("forecast", start, v);
}

void write_series_csv(const LoadSeries& s, const fs::path& path) {
  csv::Writer out(path, "period_index,kwh");
  for (Eigen::Index t = 0; t < s.size(); ++t) out.row(static_cast<long long>(s.start + t), s.values[t]);
  out.close();
}

// Panel rows of the meters a manifest assigns to `label`.
MeterPanel select_group(const MeterPanel& panel, const fs::path& manifest, const std::string& label) {
  std::map<std::string, Eigen::Index> row_of;
  for (Eigen::Index i = 0; i < panel.num_meters(); ++i) row_of[panel.meter_ids()[static_cast<std::size_t>(i)]] = i;
  std::vector<Eigen::Index> rows;
  for (const auto& r : csv::read(manifest, "meter_id,group")) {
    if (r.size() != 2) throw std::invalid_argument(manifest.string() + ": expected 2 fields");
    if (r[1] != label) continue;
    const auto it = row_of.find(r[0]);
    if (it == row_of.end()) throw std::invalid_argument("manifest meter " + r[0] + " not in panel");
    rows.push_back(it->second);
  }
  if (rows.empty()) throw std::invalid_argument("no meters in group '" + label + "'");
  return panel.subset(rows);
}

int run_synth(const Globals& g, int k) {
  SynthConfig cfg = g.config.empty() ? SynthConfig{} : load_config(g.config).synth;
  cfg.seed = g.seed;
  const MeterPanel panel = generate_panel(cfg);
  fs::create_directories(g.out);
  write_meter_csv(panel, fs::path(g.out) / "meters.csv");
  const auto groups = kmeans_groups(panel, k, derive_seed(cfg.seed, "kmeans"));
  write_group_manifest(groups, fs::path(g.out) / "groups.csv");
  csv::Writer out(fs::path(g.out) / "group_kld.csv", "group,meters,kld");
  for (const auto& grp : groups) out.row(grp.label, grp.meter_ids.size(), grp.kld_vs_system);
  out.close();
  std::cout << "wrote " << panel.num_meters() << " meters x " << panel.num_periods() << " periods to "
            << g.out << '\n';
  return 0;
}

int run_privatize(const Globals& g, const std::string& input, double epsilon, double gamma) {
  const MeterPanel panel = read_meter_csv(input);
  const PrivacyParams params(epsilon, gamma);
  const LoadSeries noisy = privatize_aggregate(panel, params, derive_seed(g.seed, "ddp-noise"));
  fs::create_directories(g.out);
  const NoiseScale scale = noise_scale(global_sensitivity(panel), params);
  csv::Writer out(fs::path(g.out) / "aggregate_ddp.csv", "period_index,kwh_noisy");
  csv::Writer scales(fs::path(g.out) / "noise_scale.csv", "period_index,b_kwh");
  for (Eigen::Index t = 0; t < noisy.size(); ++t) {
    out.row(static_cast<long long>(noisy.start + t), noisy.values[t]);
    scales.row(static_cast<long long>(noisy.start + t), scale.b[t]);
  }
  out.close();
  scales.close();
  return 0;
}

int run_forecast(const Globals& g, const std::string& input, const std::string& scheme_text, double epsilon,
                 double gamma, const std::string& manifest, const std::string& group) {
  const MeterPanel panel = read_meter_csv(input);
  const DlcProfile dlc_sys = compute_dlc(panel);
  const MeterPanel target = manifest.empty() ? panel : select_group(panel, manifest, group);
  const SettlementScheme scheme = parse_scheme(scheme_text, PrivacyParams(epsilon, gamma));
  const TrainConfig train = g.config.empty() ? TrainConfig{} : load_config(g.config).train;
  const SchemeForecast fc = forecast_scheme(scheme, target, dlc_sys, train, g.seed);
  const LoadSeries settled = settled_load(scheme, fc.backtest_actual, dlc_sys);

  fs::create_directories(g.out);
  const fs::path dir(g.out);
  write_series_csv(fc.forecast, dir / "forecast.csv");
  save_model(fc.model, dir / "model.txt");
  {
    csv::Writer out(dir / "backtest.csv", "period_index,forecast_kwh,actual_kwh,settled_kwh");
    for (Eigen::Index t = 0; t < fc.backtest_forecast.size(); ++t) {
      out.row(static_cast<long long>(fc.backtest_forecast.start + t), fc.backtest_forecast.values[t],
              fc.backtest_actual.values[t], settled.values[t]);
    }
    out.close();
  }
  csv::Writer out(dir / "forecast_metrics.csv", "scheme,wape,exposure_wape");
  out.row(scheme_name(scheme), fc.wape_backtest, wape(settled, fc.backtest_forecast));
  out.close();
  std::cout << scheme_name(scheme) << " backtest WAPE " << fc.wape_backtest << '\n';
  return 0;
}

int run_scenarios(const Globals& g, const std::string& forecast, double w, int count) {
  const LoadSeries fc = read_series_csv(forecast);
  fs::create_directories(g.out);
  write_scenarios_csv(generate_scenarios(fc, w, count, derive_seed(g.seed, "scenarios")),
                      fs::path(g.out) / "scenarios.csv");
  return 0;
}

int run_procure(const Globals& g, const std::string& instance, const std::string& forecast,
                const std::string& scenarios, double beta, double alpha, bool explicit_milp) {
  fs::create_directories(g.out);
  ProcurementInstance inst;
  if (!instance.empty()) {
    inst = read_instance_json(instance);
  } else {
    if (forecast.empty() || scenarios.empty()) {
      throw std::invalid_argument("procure needs --instance or both --forecast and --scenarios");
    }
    const LoadSeries fc = read_series_csv(forecast);
    const ErrorScenarioSet set = read_scenarios_csv(scenarios);
    if (set.start != fc.start || set.num_periods() != fc.size()) {
      throw std::invalid_argument("forecast and scenarios cover different periods");
    }
    inst.d_fore = fc.values * 1e-3;
    inst.scenarios = set;
    inst.scenarios.errors *= 1e-3;
    set_default_bounds(inst);
    const double bound = inst.da_max.maxCoeff();
    const MarketParams params = g.config.empty() ? MarketParams{} : load_config(g.config).market;
    const Market market = synthetic_market(inst.d_fore, static_cast<int>(set.num_scenarios()), -bound, bound,
                                           params, derive_seed(g.seed, "market"));
    inst.da_curve = market.da_curve;
    inst.bal_curves = market.bal_curves;
    inst.exogenous = market.exogenous;
  }
  if (!std::isnan(beta)) inst.beta = beta;
  if (!std::isnan(alpha)) inst.alpha = alpha;
  inst.validate();
  write_instance_json(inst, fs::path(g.out) / "instance.json");
  const Solution sol = explicit_milp ? solve(build_milp(inst)) : solve_instance(inst);
  write_solution_csv(sol, g.out);
  std::cout << "status " << sol.status << ", expected cost " << sol.expected_cost << ", CVaR " << sol.cvar
            << '\n';
  return sol.status == "optimal" ? 0 : 1;
}

int run_experiment_cmd(const Globals& g, bool seed_given) {
  if (g.config.empty()) throw std::invalid_argument("experiment needs --config");
  ExperimentConfig cfg = load_config(g.config);
  if (seed_given) cfg.seeds = {g.seed};
  const fs::path out = g.out.empty() ? cfg.out_dir : fs::path(g.out);
  const ResultTable table = run_experiment(cfg, std::cerr);
  if (table.rows.empty()) {
    std::cerr << "no cell succeeded\n";
    return 1;
  }
  report(table, out, config_json(cfg));
  std::cout << table.rows.size() << " rows, " << table.failed_cells << " failed cells, written to "
            << out.string() << '\n';
  return table.failed_cells == 0 ? 0 : 1;
}

int run_report(const Globals& g, const std::string& results) {
  report(read_results_csv(results), g.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supplier-side value of smart-meter data: privacy, forecasting and procurement"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.out.clear();
  auto* seed_opt = app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--out", g.out, "Output directory");

  int k = 4;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic meter panel and k-means groups");
  synth->add_option("-k,--groups", k, "Number of k-means groups")->capture_default_str();

  std::string input;
  double epsilon = 1.0, gamma = 0.75;
  auto* privatize = app.add_subcommand("privatize", "Release a DDP-noised aggregate of a meter CSV");
  privatize->add_option("--input", input, "Meter CSV")->required();
  privatize->add_option("--epsilon", epsilon)->capture_default_str();
  privatize->add_option("--gamma", gamma)->capture_default_str();

  std::string scheme = "hhs_ehh", manifest, group;
  auto* forecast = app.add_subcommand("forecast", "Train a scheme's forecaster and backtest it");
  forecast->add_option("--input", input, "Meter CSV")->required();
  forecast->add_option("--scheme", scheme, "nhhs, hhs_dlcsys, hhs_ehh or hhs_ddp")->capture_default_str();
  forecast->add_option("--epsilon", epsilon)->capture_default_str();
  forecast->add_option("--gamma", gamma)->capture_default_str();
  forecast->add_option("--manifest", manifest, "Group manifest CSV");
  forecast->add_option("--group", group, "Group label in the manifest");

  std::string forecast_path;
  double w = 0.1;
  int count = 20;
  auto* scenarios = app.add_subcommand("scenarios", "Sample forecast-error scenarios");
  scenarios->add_option("--forecast", forecast_path, "Forecast CSV (period_index,kwh)")->required();
  scenarios->add_option("--wape", w, "Backtest WAPE")->required();
  scenarios->add_option("--count", count, "Number of scenarios")->capture_default_str();

  std::string instance, scenarios_path;
  double beta = std::nan(""), alpha = std::nan("");
  bool explicit_milp = false;
  auto* procure = app.add_subcommand("procure", "Solve the day-ahead / balancing procurement problem");
  procure->add_option("--instance", instance, "Instance JSON");
  procure->add_option("--forecast", forecast_path, "Forecast CSV (with --scenarios)");
  procure->add_option("--scenarios", scenarios_path, "Scenario CSV");
  procure->add_option("--beta", beta, "Risk aversion (overrides the instance)");
  procure->add_option("--alpha", alpha, "CVaR confidence (overrides the instance)");
  procure->add_flag("--explicit-milp", explicit_milp, "Branch and bound on the explicit MILP");

  auto* experiment = app.add_subcommand("experiment", "Run every configured cell and write the report");

  std::string results;
  auto* rep = app.add_subcommand("report", "Rebuild the summary tables from results.csv");
  rep->add_option("--results", results, "results.csv of an experiment")->required();

  CLI11_PARSE(app, argc, argv);
  if (g.out.empty() && !experiment->parsed()) g.out = "out";

  try {
    if (synth->parsed()) return run_synth(g, k);
    if (privatize->parsed()) return run_privatize(g, input, epsilon, gamma);
    if (forecast->parsed()) return run_forecast(g, input, scheme, epsilon, gamma, manifest, group);
    if (scenarios->parsed()) return run_scenarios(g, forecast_path, w, count);
    if (procure->parsed()) {
      return run_procure(g, instance, forecast_path, scenarios_path, beta, alpha, explicit_milp);
    }
    if (experiment->parsed()) return run_experiment_cmd(g, seed_opt->count() > 0);
    if (rep->parsed()) return run_report(g, results);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
