#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "smval/domain.hpp"
#include "smval/mlp.hpp"
#include "smval/scheme.hpp"

namespace smval {

inline constexpr int kHiddenUnits = 4;
inline constexpr int kBacktestDays = 14;

// Lag offsets in periods: E_{t-h}, E_{t-h-1}, E_{t-2h+1}, E_{t-2h}, E_{t-3h}.
inline constexpr std::array<int, 5> kLagOffsets = {kPeriodsPerDay, kPeriodsPerDay + 1,
                                                   2 * kPeriodsPerDay - 1, 2 * kPeriodsPerDay,
                                                   3 * kPeriodsPerDay};
// Daily model lags in days.
inline constexpr std::array<int, 3> kDailyLagOffsets = {1, 2, 7};

struct FeatureVector {
  int week_of_year = 0;
  int day_of_week = 0;
  int settlement_period = 0;
  std::array<double, 5> lags{};

  // [week, day, period, lags...]
  Eigen::VectorXd encode() const;
};

/// Features for global period t, using history values at t - offset.
FeatureVector build_features(const LoadSeries& history, std::int64_t t);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 250;
  int batch_size = 64;
  std::uint64_t seed = 1;
  double tolerance = 1e-6;   // relative loss improvement counted as progress
  int patience = 25;         // epochs without progress before stopping
  int min_samples = 100;     // half-hourly model
  int min_samples_daily = 20;
};

using MlpModel = Mlp<double>;

struct TrainingSet {
  Eigen::MatrixXd features;  // one raw sample per row
  Eigen::VectorXd targets;
};

/// Mini-batch gradient descent on the mean squared error. An epoch whose full
/// training loss increases is rolled back and the learning rate halved, so the
/// recorded per-epoch losses never increase.
MlpModel train(const TrainingSet& data, const TrainConfig& cfg,
               std::vector<double>* epoch_losses = nullptr, int min_samples = -1);

double predict(const MlpModel& model, const Eigen::VectorXd& raw_features);
double predict(const MlpModel& model, const FeatureVector& x);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

struct SchemeForecast {
  LoadSeries forecast;           // the day after the panel ends
  LoadSeries backtest_forecast;  // trailing kBacktestDays of the panel
  LoadSeries backtest_actual;    // true aggregate over the same window
  double wape_backtest = 0.0;
  MlpModel model;
};

/// Data pathway of each scheme: daily energy + system profile (Nhhs,
/// HhsDlcSys), true half-hourly aggregate (HhsEhh) or its privatized release
/// (HhsDdp, used for both lags and targets). Backtests always score against
/// the true aggregate.
SchemeForecast forecast_scheme(const SettlementScheme& scheme, const MeterPanel& panel,
                               const DlcProfile& dlc_sys, const TrainConfig& cfg,
                               std::uint64_t seed);

/// Half-hourly pipeline on an already-observed series (raw or privatized).
SchemeForecast forecast_half_hourly(const LoadSeries& observed, const LoadSeries& truth,
                                    const TrainConfig& cfg);

/// Daily pipeline: forecast daily energy, spread it with `dlc_sys`.
SchemeForecast forecast_daily(const LoadSeries& truth, const DlcProfile& dlc_sys,
                              const TrainConfig& cfg);

}  // namespace smval
