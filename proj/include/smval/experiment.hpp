#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "smval/forecast.hpp"
#include "smval/market.hpp"
#include "smval/privacy.hpp"
#include "smval/synth.hpp"

namespace smval {

struct ExperimentConfig {
  SynthConfig synth;
  std::filesystem::path input_csv;  // meter CSV; replaces the synthetic panel
  // Each entry is "all", "highest_kld", "lowest_kld" or a k-means group label.
  std::vector<std::string> groups{"highest_kld"};
  int kmeans_k = 4;
  std::vector<std::string> schemes{"nhhs", "hhs_dlcsys", "hhs_ehh", "hhs_ddp"};
  std::vector<double> epsilons{0.25};
  std::vector<double> gammas{0.75};
  std::vector<double> hetero_p;  // empty: no heterogeneity sweep
  int num_scenarios = 20;
  MarketParams market;
  std::filesystem::path da_ladder, bal_ladder;  // optional market bid ladders
  double bound_multiple = 3.0;  // volume bounds: +- multiple * peak group load
  double beta = 0.0;
  double alpha = 0.95;
  std::vector<std::uint64_t> seeds{1};
  TrainConfig train;
  std::filesystem::path out_dir = "results";

  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON text of the config (sorted keys).
std::string config_json(const ExperimentConfig& cfg);

/// One result cell. Fields that do not apply to a cell are NaN.
struct SchemeResult {
  std::string kind;     // "scheme" or "hetero"
  std::string group;
  std::string scheme;
  double epsilon = 0.0;
  double gamma = 0.0;
  double p = 0.0;
  std::uint64_t seed = 0;
  double kld = 0.0;
  double wape = 0.0;           // backtest against the true aggregate
  double exposure_wape = 0.0;  // backtest against the settled load
  double expected_cost = 0.0;
  double cvar = 0.0;
  double omega_exp = 0.0;      // p-weighted mix of the pure DDP and raw costs
};

struct ResultTable {
  std::vector<SchemeResult> rows;  // sorted by key
  int failed_cells = 0;
};

/// Everything one seed needs: the group panel, the system profile and the
/// market shared by every scheme in the cell.
struct CellContext {
  MeterPanel group_panel;
  DlcProfile dlc_sys;
  double kld = 0.0;
  std::string group;
  std::uint64_t seed = 0;
};

/// Forecast, scenario generation and procurement for one scheme on a group.
SchemeResult run_scheme(const ExperimentConfig& cfg, const CellContext& ctx,
                        const SettlementScheme& scheme);

/// Splits the group at random into a fraction p that releases a DDP-noised
/// sub-aggregate and a remainder that releases raw data; the total forecast
/// is the sum of the two forecasts.
SchemeResult run_hetero(const ExperimentConfig& cfg, const CellContext& ctx, double p,
                        const PrivacyParams& params);

/// Builds the panel, selects the groups and runs every cell. A failing cell
/// is reported on `log` and skipped.
ResultTable run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Heterogeneity rows only, for each p and privacy setting in the config.
ResultTable heterogeneity_sweep(const ExperimentConfig& cfg, const std::vector<double>& p_values,
                                const PrivacyParams& params, std::ostream& log);

/// The panel the config describes (synthetic or loaded).
MeterPanel experiment_panel(const ExperimentConfig& cfg);
CellContext make_context(const ExperimentConfig& cfg, const MeterPanel& panel,
                         const std::string& group, std::uint64_t seed);

// results.csv round trip and the derived tables: kld_wape.csv, scheme_wape.csv,
// costs.csv, hetero.csv, elasticity.csv and run_metadata.json.
void write_results_csv(const ResultTable& table, const std::filesystem::path& path);
ResultTable read_results_csv(const std::filesystem::path& path);
void report(const ResultTable& table, const std::filesystem::path& dir,
            const std::string& config_text = {});

}  // namespace smval
