#pragma once

#include <cstdint>
#include <filesystem>

#include "smval/domain.hpp"

namespace smval {

/// S x T forecast-error deviations (kWh unless converted) with probabilities.
struct ErrorScenarioSet {
  std::int64_t start = 0;       // period index of column 0
  Eigen::MatrixXd errors;       // scenarios x periods
  Eigen::VectorXd probabilities;

  Eigen::Index num_scenarios() const { return errors.rows(); }
  Eigen::Index num_periods() const { return errors.cols(); }
};

/// sigma_t = wape * |forecast_t| * sqrt(pi / 2), so that E|N(0, sigma_t)|
/// equals wape * |forecast_t|.
Eigen::VectorXd calibrate_sigma(double wape, const LoadSeries& forecast);

/// Independent N(0, sigma_t) draws for every (scenario, period); uniform
/// probabilities 1/S.
ErrorScenarioSet generate_scenarios(const LoadSeries& forecast, double wape, int num_scenarios,
                                    std::uint64_t seed);

/// Scales a group series to system level: every value divided by `share`.
LoadSeries scale_to_system(const LoadSeries& series, double share);

// Scenario CSV: `scenario,period_index,err_kwh,prob`.
void write_scenarios_csv(const ErrorScenarioSet& set, const std::filesystem::path& path);
ErrorScenarioSet read_scenarios_csv(const std::filesystem::path& path);

}  // namespace smval
