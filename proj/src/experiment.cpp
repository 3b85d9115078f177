#include "smval/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "smval/csv.hpp"
#include "smval/metrics.hpp"
#include "smval/procurement.hpp"
#include "smval/random.hpp"
#include "smval/scenario.hpp"
#include "smval/scheme.hpp"

#ifndef SMVAL_VERSION
#define SMVAL_VERSION "dev"
#endif

namespace smval {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kKwhToMwh = 1e-3;

// -- config -------------------------------------------------------------------

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void take_path(const json& j, const char* key, std::filesystem::path& field) {
  if (j.contains(key)) field = j.at(key).get<std::string>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
  }
}

SynthConfig synth_from(const json& j) {
  reject_unknown(j, {"n_meters", "n_weeks", "start", "base_load", "morning_peak", "evening_peak",
                     "weekend_shift", "noise", "pv_fraction", "ev_fraction", "seed"},
                 "synth");
  SynthConfig c;
  take(j, "n_meters", c.n_meters);
  take(j, "n_weeks", c.n_weeks);
  take(j, "start", c.start);
  take(j, "base_load", c.base_load);
  take(j, "morning_peak", c.morning_peak);
  take(j, "evening_peak", c.evening_peak);
  take(j, "weekend_shift", c.weekend_shift);
  take(j, "noise", c.noise);
  take(j, "pv_fraction", c.pv_fraction);
  take(j, "ev_fraction", c.ev_fraction);
  take(j, "seed", c.seed);
  return c;
}

json synth_json(const SynthConfig& c) {
  return {{"n_meters", c.n_meters},       {"n_weeks", c.n_weeks},
          {"start", c.start},             {"base_load", c.base_load},
          {"morning_peak", c.morning_peak}, {"evening_peak", c.evening_peak},
          {"weekend_shift", c.weekend_shift}, {"noise", c.noise},
          {"pv_fraction", c.pv_fraction}, {"ev_fraction", c.ev_fraction},
          {"seed", c.seed}};
}

MarketParams market_from(const json& j) {
  reject_unknown(j, {"system_multiple", "da_price", "da_levels", "bal_price", "bal_slope",
                     "imbalance_sd", "price_spread", "bal_levels"},
                 "market");
  MarketParams m;
  take(j, "system_multiple", m.system_multiple);
  take(j, "da_price", m.da_price);
  take(j, "da_levels", m.da_levels);
  take(j, "bal_price", m.bal_price);
  take(j, "bal_slope", m.bal_slope);
  take(j, "imbalance_sd", m.imbalance_sd);
  take(j, "price_spread", m.price_spread);
  take(j, "bal_levels", m.bal_levels);
  return m;
}

json market_json(const MarketParams& m) {
  return {{"system_multiple", m.system_multiple}, {"da_price", m.da_price},
          {"da_levels", m.da_levels},             {"bal_price", m.bal_price},
          {"bal_slope", m.bal_slope},             {"imbalance_sd", m.imbalance_sd},
          {"price_spread", m.price_spread},       {"bal_levels", m.bal_levels}};
}

TrainConfig train_from(const json& j) {
  reject_unknown(j, {"learning_rate", "epochs", "batch_size", "tolerance", "patience", "min_samples",
                     "min_samples_daily"},
                 "train");
  TrainConfig t;
  take(j, "learning_rate", t.learning_rate);
  take(j, "epochs", t.epochs);
  take(j, "batch_size", t.batch_size);
  take(j, "tolerance", t.tolerance);
  take(j, "patience", t.patience);
  take(j, "min_samples", t.min_samples);
  take(j, "min_samples_daily", t.min_samples_daily);
  return t;
}

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"epochs", t.epochs},
          {"batch_size", t.batch_size},       {"tolerance", t.tolerance},
          {"patience", t.patience},           {"min_samples", t.min_samples},
          {"min_samples_daily", t.min_samples_daily}};
}

// -- cells --------------------------------------------------------------------

double epsilon_of(const SettlementScheme& s) {
  if (const auto* d = std::get_if<HhsDdp>(&s)) return d->params.epsilon();
  return kNaN;
}

double gamma_of(const SettlementScheme& s) {
  if (const auto* d = std::get_if<HhsDdp>(&s)) return d->params.gamma();
  return kNaN;
}

// Mean day of the final week of the true group load, in MWh: the scale the
// shared market is built around.
Eigen::VectorXd reference_day_mwh(const LoadSeries& truth) {
  Eigen::VectorXd day = Eigen::VectorXd::Zero(kPeriodsPerDay);
  const Eigen::Index days = std::min<Eigen::Index>(kDaysPerWeek, truth.size() / kPeriodsPerDay);
  const Eigen::Index first = truth.size() - days * kPeriodsPerDay;
  for (Eigen::Index d = 0; d < days; ++d) day += truth.values.segment(first + d * kPeriodsPerDay, kPeriodsPerDay);
  return day * (kKwhToMwh / static_cast<double>(days));
}

Market build_market(const ExperimentConfig& cfg, const Eigen::VectorXd& reference, double bound,
                    std::uint64_t seed) {
  Market market = synthetic_market(reference, cfg.num_scenarios, -bound, bound, cfg.market, seed);
  if (!cfg.da_ladder.empty()) {
    const auto ladder = read_ladder_csv(cfg.da_ladder);
    double total = 0.0;
    for (const auto& bid : ladder) total += bid.volume;
    market.da_curve = build_curve(ladder, total / cfg.market.da_levels);
  }
  if (!cfg.bal_ladder.empty()) {
    const auto ladder = read_ladder_csv(cfg.bal_ladder);
    double total = 0.0;
    for (const auto& bid : ladder) total += bid.volume;
    market.bal_curves = {build_curve(ladder, total / cfg.market.bal_levels, -0.5 * total)};
  }
  return market;
}

SchemeResult procure(const ExperimentConfig& cfg, const CellContext& ctx, const LoadSeries& forecast,
                     double exposure_wape) {
  const LoadSeries truth = aggregate_panel(ctx.group_panel);
  const Eigen::VectorXd reference = reference_day_mwh(truth);
  // Volume bounds scale with the peak observed group load, which every scheme
  // in the cell shares.
  const double bound = cfg.bound_multiple * kKwhToMwh * truth.values.cwiseAbs().maxCoeff();
  const Market market = build_market(cfg, reference, bound, derive_seed(ctx.seed, "market"));
  const ErrorScenarioSet errors =
      generate_scenarios(forecast, exposure_wape, cfg.num_scenarios, derive_seed(ctx.seed, "scenarios"));

  ProcurementInstance inst;
  inst.d_fore = forecast.values * kKwhToMwh;
  inst.scenarios = errors;
  inst.scenarios.errors *= kKwhToMwh;
  inst.da_curve = market.da_curve;
  inst.bal_curves = market.bal_curves;
  inst.exogenous = market.exogenous;
  inst.beta = cfg.beta;
  inst.alpha = cfg.alpha;
  const auto T = inst.periods(), S = inst.num_scenarios();
  inst.da_min = Eigen::VectorXd::Constant(T, -bound);
  inst.da_max = Eigen::VectorXd::Constant(T, bound);
  inst.bal_min = Eigen::MatrixXd::Constant(S, T, -bound);
  inst.bal_max = Eigen::MatrixXd::Constant(S, T, bound);

  const Solution sol = solve_instance(inst);
  if (sol.status == "infeasible") {
    throw std::runtime_error("procurement infeasible: scenario demand in period " +
                             std::to_string(sol.infeasible_row) +
                             " exceeds the volume bounds (raise bound_multiple)");
  }
  if (sol.status != "optimal") throw std::runtime_error("procurement " + sol.status);
  SchemeResult r;
  r.group = ctx.group;
  r.seed = ctx.seed;
  r.kld = ctx.kld;
  r.exposure_wape = exposure_wape;
  r.expected_cost = sol.expected_cost;
  r.cvar = sol.cvar;
  r.omega_exp = kNaN;
  return r;
}

std::tuple<int, std::string, std::string, double, double, double, std::uint64_t> key_of(
    const SchemeResult& r) {
  const auto k = [](double v) { return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v; };
  return {r.kind == "scheme" ? 0 : 1, r.group, r.scheme, k(r.epsilon), k(r.gamma), k(r.p), r.seed};
}

void sort_rows(std::vector<SchemeResult>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return key_of(a) < key_of(b); });
}

std::vector<PrivacyParams> privacy_grid(const ExperimentConfig& cfg) {
  std::vector<PrivacyParams> out;
  for (double e : cfg.epsilons)
    for (double g : cfg.gammas) out.emplace_back(e, g);
  return out;
}

std::string cell_name(const std::string& group, const std::string& what, std::uint64_t seed) {
  return "[" + group + " " + what + " seed=" + std::to_string(seed) + "]";
}

std::string fmt(double v) { return std::isnan(v) ? std::string() : csv::format(v); }

double parse_optional(const std::string& s) { return s.empty() ? kNaN : csv::to_double(s); }

}  // namespace

// -- public -------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (input_csv.empty()) {
    synth.validate();
  } else if (!std::filesystem::exists(input_csv)) {
    throw std::invalid_argument("config: input_csv " + input_csv.string() + " does not exist");
  }
  for (const auto& p : {da_ladder, bal_ladder}) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      throw std::invalid_argument("config: ladder " + p.string() + " does not exist");
    }
  }
  if (schemes.empty()) throw std::invalid_argument("config: scheme list is empty");
  if (groups.empty()) throw std::invalid_argument("config: group list is empty");
  if (epsilons.empty() || gammas.empty()) throw std::invalid_argument("config: privacy grids are empty");
  if (seeds.empty()) throw std::invalid_argument("config: seed list is empty");
  for (double e : epsilons) PrivacyParams(e, gammas.front());
  for (double g : gammas) PrivacyParams(epsilons.front(), g);
  for (const auto& s : schemes) parse_scheme(s, PrivacyParams(epsilons.front(), gammas.front()));
  for (double p : hetero_p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("config: heterogeneity fractions must lie in [0, 1]");
  }
  if (kmeans_k < 1) throw std::invalid_argument("config: kmeans_k must be >= 1");
  if (num_scenarios < 1) throw std::invalid_argument("config: num_scenarios must be >= 1");
  if (!(beta >= 0.0) || !(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("config: need beta >= 0 and alpha in (0, 1)");
  }
  if (!(bound_multiple > 0.0)) throw std::invalid_argument("config: bound_multiple must be > 0");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const json j = json::parse(in);
  reject_unknown(j, {"synth", "input_csv", "groups", "kmeans_k", "schemes", "epsilons", "gammas",
                     "hetero_p", "num_scenarios", "market", "da_ladder", "bal_ladder",
                     "bound_multiple", "beta", "alpha", "seeds", "train", "out_dir"},
                 path.string());
  ExperimentConfig c;
  if (j.contains("synth")) c.synth = synth_from(j.at("synth"));
  if (j.contains("market")) c.market = market_from(j.at("market"));
  if (j.contains("train")) c.train = train_from(j.at("train"));
  take_path(j, "input_csv", c.input_csv);
  take(j, "groups", c.groups);
  take(j, "kmeans_k", c.kmeans_k);
  take(j, "schemes", c.schemes);
  take(j, "epsilons", c.epsilons);
  take(j, "gammas", c.gammas);
  take(j, "hetero_p", c.hetero_p);
  take(j, "num_scenarios", c.num_scenarios);
  take_path(j, "da_ladder", c.da_ladder);
  take_path(j, "bal_ladder", c.bal_ladder);
  take(j, "bound_multiple", c.bound_multiple);
  take(j, "beta", c.beta);
  take(j, "alpha", c.alpha);
  take(j, "seeds", c.seeds);
  take_path(j, "out_dir", c.out_dir);
  // Input paths resolve against the file's directory; out_dir stays relative
  // to the working directory.
  const auto base = path.parent_path();
  for (auto* p : {&c.input_csv, &c.da_ladder, &c.bal_ladder}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  c.validate();
  return c;
}

std::string config_json(const ExperimentConfig& c) {
  json j;
  j["synth"] = synth_json(c.synth);
  j["market"] = market_json(c.market);
  j["train"] = train_json(c.train);
  j["input_csv"] = c.input_csv.string();
  j["groups"] = c.groups;
  j["kmeans_k"] = c.kmeans_k;
  j["schemes"] = c.schemes;
  j["epsilons"] = c.epsilons;
  j["gammas"] = c.gammas;
  j["hetero_p"] = c.hetero_p;
  j["num_scenarios"] = c.num_scenarios;
  j["da_ladder"] = c.da_ladder.string();
  j["bal_ladder"] = c.bal_ladder.string();
  j["bound_multiple"] = c.bound_multiple;
  j["beta"] = c.beta;
  j["alpha"] = c.alpha;
  j["seeds"] = c.seeds;
  return j.dump(2);
}

MeterPanel experiment_panel(const ExperimentConfig& cfg) {
  return cfg.input_csv.empty() ? generate_panel(cfg.synth) : read_meter_csv(cfg.input_csv);
}

CellContext make_context(const ExperimentConfig& cfg, const MeterPanel& panel,
                         const std::string& group, std::uint64_t seed) {
  const DlcProfile system = compute_dlc(panel);
  if (group == "all") {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(panel.num_meters()));
    for (Eigen::Index i = 0; i < panel.num_meters(); ++i) rows[static_cast<std::size_t>(i)] = i;
    const ConsumerGroup g = make_group(panel, rows, group, system);
    return {panel.subset(g.rows), system, g.kld_vs_system, group, seed};
  }
  // Grouping uses the synthetic-data seed, so every run seed sees the same groups.
  const auto groups = kmeans_groups(panel, cfg.kmeans_k, derive_seed(cfg.synth.seed, "kmeans"));
  const ConsumerGroup* pick = nullptr;
  if (group == "highest_kld") {
    pick = &groups.back();
  } else if (group == "lowest_kld") {
    pick = &groups.front();
  } else {
    for (const auto& g : groups)
      if (g.label == group) pick = &g;
  }
  if (!pick) throw std::invalid_argument("unknown group '" + group + "'");
  return {panel.subset(pick->rows), system, pick->kld_vs_system, group, seed};
}

SchemeResult run_scheme(const ExperimentConfig& cfg, const CellContext& ctx,
                        const SettlementScheme& scheme) {
  const SchemeForecast fc = forecast_scheme(scheme, ctx.group_panel, ctx.dlc_sys, cfg.train, ctx.seed);
  const LoadSeries settled = settled_load(scheme, fc.backtest_actual, ctx.dlc_sys);
  SchemeResult r = procure(cfg, ctx, fc.forecast, wape(settled, fc.backtest_forecast));
  r.kind = "scheme";
  r.scheme = scheme_name(scheme);
  r.epsilon = epsilon_of(scheme);
  r.gamma = gamma_of(scheme);
  r.p = kNaN;
  r.wape = fc.wape_backtest;
  return r;
}

SchemeResult run_hetero(const ExperimentConfig& cfg, const CellContext& ctx, double p,
                        const PrivacyParams& params) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("run_hetero: p must lie in [0, 1]");
  const MeterPanel& panel = ctx.group_panel;
  const Eigen::Index n = panel.num_meters();
  const auto n_private = static_cast<Eigen::Index>(std::llround(p * static_cast<double>(n)));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(ctx.seed, "hetero-split"));
  for (Eigen::Index i = 0; i < n_private; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n - i));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  const std::vector<Eigen::Index> priv(order.begin(), order.begin() + n_private);
  const std::vector<Eigen::Index> raw(order.begin() + n_private, order.end());

  // Each part is forecast on its own; an empty part contributes nothing.
  std::vector<SchemeForecast> parts;
  if (!priv.empty()) parts.push_back(forecast_scheme(HhsDdp{params}, panel.subset(priv), ctx.dlc_sys, cfg.train, ctx.seed));
  if (!raw.empty()) parts.push_back(forecast_scheme(HhsEhh{}, panel.subset(raw), ctx.dlc_sys, cfg.train, ctx.seed));
  LoadSeries forecast = parts.front().forecast;
  LoadSeries backtest = parts.front().backtest_forecast;
  for (std::size_t k = 1; k < parts.size(); ++k) {
    forecast.values += parts[k].forecast.values;
    backtest.values += parts[k].backtest_forecast.values;
  }
  const LoadSeries truth = aggregate_panel(panel);
  const LoadSeries actual("backtest_actual", backtest.start, truth.values.tail(backtest.size()));
  const double w = wape(actual, backtest);

  SchemeResult r = procure(cfg, ctx, forecast, w);
  r.kind = "hetero";
  r.scheme = "hetero";
  r.epsilon = params.epsilon();
  r.gamma = params.gamma();
  r.p = p;
  r.wape = w;
  const double cost_ddp = run_scheme(cfg, ctx, HhsDdp{params}).expected_cost;
  const double cost_raw = run_scheme(cfg, ctx, HhsEhh{}).expected_cost;
  r.omega_exp = p * cost_ddp + (1.0 - p) * cost_raw;
  return r;
}

ResultTable run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const MeterPanel panel = experiment_panel(cfg);
  ResultTable table;
  for (const auto& group : cfg.groups) {
    for (std::uint64_t seed : cfg.seeds) {
      std::optional<CellContext> ctx;
      try {
        ctx.emplace(make_context(cfg, panel, group, seed));
      } catch (const std::exception& e) {
        log << cell_name(group, "setup", seed) << " failed: " << e.what() << '\n';
        ++table.failed_cells;
        continue;
      }
      std::vector<std::pair<std::string, SettlementScheme>> cells;
      for (const auto& name : cfg.schemes) {
        const auto probe = parse_scheme(name, PrivacyParams(cfg.epsilons.front(), cfg.gammas.front()));
        if (std::holds_alternative<HhsDdp>(probe)) {
          for (const auto& params : privacy_grid(cfg)) cells.emplace_back(name, HhsDdp{params});
        } else {
          cells.emplace_back(name, probe);
        }
      }
      for (const auto& [name, scheme] : cells) {
        try {
          table.rows.push_back(run_scheme(cfg, *ctx, scheme));
        } catch (const std::exception& e) {
          log << cell_name(group, scheme_name(scheme), seed) << " failed: " << e.what() << '\n';
          ++table.failed_cells;
        }
      }
      for (double p : cfg.hetero_p) {
        for (const auto& params : privacy_grid(cfg)) {
          try {
            table.rows.push_back(run_hetero(cfg, *ctx, p, params));
          } catch (const std::exception& e) {
            log << cell_name(group, "hetero p=" + csv::format(p), seed) << " failed: " << e.what() << '\n';
            ++table.failed_cells;
          }
        }
      }
    }
  }
  sort_rows(table.rows);
  return table;
}

ResultTable heterogeneity_sweep(const ExperimentConfig& cfg, const std::vector<double>& p_values,
                                const PrivacyParams& params, std::ostream& log) {
  cfg.validate();
  const MeterPanel panel = experiment_panel(cfg);
  ResultTable table;
  for (const auto& group : cfg.groups) {
    for (std::uint64_t seed : cfg.seeds) {
      for (double p : p_values) {
        try {
          table.rows.push_back(run_hetero(cfg, make_context(cfg, panel, group, seed), p, params));
        } catch (const std::exception& e) {
          log << cell_name(group, "hetero p=" + csv::format(p), seed) << " failed: " << e.what() << '\n';
          ++table.failed_cells;
        }
      }
    }
  }
  sort_rows(table.rows);
  return table;
}

// -- files --------------------------------------------------------------------

namespace {

constexpr const char* kResultsHeader =
    "kind,group,scheme,epsilon,gamma,p,seed,kld,wape,exposure_wape,expected_cost,cvar,omega_exp";

struct Stats {
  double sum = 0.0, sum_sq = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return sum / n; }
  double sd() const {
    if (n < 2) return 0.0;
    return std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1)));
  }
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void write_results_csv(const ResultTable& table, const std::filesystem::path& path) {
  csv::Writer out(path, kResultsHeader);
  for (const auto& r : table.rows) {
    out.row(r.kind, r.group, r.scheme, fmt(r.epsilon), fmt(r.gamma), fmt(r.p),
            static_cast<unsigned long long>(r.seed), r.kld, r.wape, r.exposure_wape, r.expected_cost,
            r.cvar, fmt(r.omega_exp));
  }
  out.close();
}

ResultTable read_results_csv(const std::filesystem::path& path) {
  ResultTable table;
  for (const auto& f : csv::read(path, kResultsHeader)) {
    if (f.size() != 13) throw std::invalid_argument(path.string() + ": expected 13 fields");
    SchemeResult r;
    r.kind = f[0];
    r.group = f[1];
    r.scheme = f[2];
    r.epsilon = parse_optional(f[3]);
    r.gamma = parse_optional(f[4]);
    r.p = parse_optional(f[5]);
    r.seed = static_cast<std::uint64_t>(std::stoull(f[6]));
    r.kld = csv::to_double(f[7]);
    r.wape = csv::to_double(f[8]);
    r.exposure_wape = csv::to_double(f[9]);
    r.expected_cost = csv::to_double(f[10]);
    r.cvar = csv::to_double(f[11]);
    r.omega_exp = parse_optional(f[12]);
    table.rows.push_back(std::move(r));
  }
  sort_rows(table.rows);
  return table;
}

void report(const ResultTable& table, const std::filesystem::path& dir, const std::string& config_text) {
  if (table.rows.empty()) throw std::invalid_argument("report: result table is empty");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw std::runtime_error("report: cannot create " + dir.string());
  }
  write_results_csv(table, dir / "results.csv");

  using SchemeKey = std::tuple<std::string, std::string, std::string, std::string>;  // group, scheme, eps, gamma
  std::map<SchemeKey, Stats> wape_stats, exposure_stats, cost_stats, cvar_stats;
  std::map<std::string, double> group_kld;
  {
    csv::Writer out(dir / "kld_wape.csv", "group,kld,scheme,epsilon,gamma,seed,wape");
    for (const auto& r : table.rows) {
      if (r.kind != "scheme") continue;
      out.row(r.group, r.kld, r.scheme, fmt(r.epsilon), fmt(r.gamma), static_cast<unsigned long long>(r.seed), r.wape);
      const SchemeKey key{r.group, r.scheme, fmt(r.epsilon), fmt(r.gamma)};
      wape_stats[key].add(r.wape);
      exposure_stats[key].add(r.exposure_wape);
      cost_stats[key].add(r.expected_cost);
      cvar_stats[key].add(r.cvar);
      group_kld[r.group] = r.kld;
    }
    out.close();
  }
  {
    csv::Writer out(dir / "scheme_wape.csv", "group,kld,scheme,epsilon,gamma,seeds,wape_mean,wape_sd");
    for (const auto& [key, s] : wape_stats) {
      const auto& [group, scheme, eps, gamma] = key;
      out.row(group, group_kld[group], scheme, eps, gamma, s.n, s.mean(), s.sd());
    }
    out.close();
  }
  {
    csv::Writer out(dir / "costs.csv",
                    "group,scheme,epsilon,gamma,seeds,wape_mean,exposure_wape_mean,expected_cost_mean,"
                    "expected_cost_sd,cvar_mean,cvar_sd");
    for (const auto& [key, s] : cost_stats) {
      const auto& [group, scheme, eps, gamma] = key;
      out.row(group, scheme, eps, gamma, s.n, wape_stats[key].mean(), exposure_stats[key].mean(), s.mean(),
              s.sd(), cvar_stats[key].mean(), cvar_stats[key].sd());
    }
    out.close();
  }
  {
    // Percent change of cost per percentage point of WAPE, relative to the
    // raw half-hourly scheme of the same group.
    csv::Writer out(dir / "elasticity.csv",
                    "group,scheme,epsilon,gamma,wape_change_pp,cost_change_pct,cvar_change_pct,"
                    "cost_elasticity,cvar_elasticity");
    for (const auto& [key, s] : cost_stats) {
      const auto& [group, scheme, eps, gamma] = key;
      const SchemeKey ref{group, "hhs_ehh", "", ""};
      if (scheme == "hhs_ehh" || !cost_stats.count(ref)) continue;
      const double dw = 100.0 * (wape_stats[key].mean() - wape_stats[ref].mean());
      const double dc = 100.0 * (s.mean() / cost_stats[ref].mean() - 1.0);
      const double dv = 100.0 * (cvar_stats[key].mean() / cvar_stats[ref].mean() - 1.0);
      const double ec = dw != 0.0 ? dc / dw : kNaN;
      const double ev = dw != 0.0 ? dv / dw : kNaN;
      out.row(group, scheme, eps, gamma, dw, dc, dv, fmt(ec), fmt(ev));
    }
    out.close();
  }
  {
    csv::Writer out(dir / "hetero.csv",
                    "group,epsilon,gamma,p,seed,wape,expected_cost,omega_exp,difference");
    for (const auto& r : table.rows) {
      if (r.kind != "hetero") continue;
      out.row(r.group, fmt(r.epsilon), fmt(r.gamma), fmt(r.p), static_cast<unsigned long long>(r.seed), r.wape,
              r.expected_cost, r.omega_exp, r.expected_cost - r.omega_exp);
    }
    out.close();
  }
  {
    std::set<std::uint64_t> seeds;
    for (const auto& r : table.rows) seeds.insert(r.seed);
    json meta;
    meta["tool"] = "smval";
    meta["version"] = SMVAL_VERSION;
    meta["seeds"] = std::vector<std::uint64_t>(seeds.begin(), seeds.end());
    meta["rows"] = table.rows.size();
    meta["failed_cells"] = table.failed_cells;
    meta["kld_log_base"] = "e";
    if (config_text.empty()) {
      meta["config_hash"] = nullptr;
    } else {
      char hex[17];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(config_text)));
      meta["config_hash"] = hex;
      meta["config"] = json::parse(config_text);
    }
    std::ofstream out(dir / "run_metadata.json");
    if (!out) throw std::runtime_error("report: cannot write run_metadata.json");
    out << meta.dump(2) << '\n';
  }
}

}  // namespace smval
