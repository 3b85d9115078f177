#include "smval/scenario.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "smval/csv.hpp"
#include "smval/random.hpp"

namespace smval {

Eigen::VectorXd calibrate_sigma(double wape, const LoadSeries& forecast) {
  if (!(wape >= 0.0)) throw std::invalid_argument("calibrate_sigma: wape must be >= 0");
  const double k = wape * std::sqrt(std::numbers::pi / 2.0);
  return forecast.values.cwiseAbs() * k;
}

ErrorScenarioSet generate_scenarios(const LoadSeries& forecast, double wape, int num_scenarios,
                                    std::uint64_t seed) {
  if (num_scenarios < 1) throw std::invalid_argument("generate_scenarios: need S >= 1");
  const Eigen::VectorXd sigma = calibrate_sigma(wape, forecast);
  Rng rng(seed);
  ErrorScenarioSet out;
  out.start = forecast.start;
  out.errors.resize(num_scenarios, forecast.size());
  for (int s = 0; s < num_scenarios; ++s) {
    for (Eigen::Index t = 0; t < forecast.size(); ++t) {
      out.errors(s, t) = sigma[t] * standard_normal(rng);
    }
  }
  out.probabilities = Eigen::VectorXd::Constant(num_scenarios, 1.0 / num_scenarios);
  return out;
}

LoadSeries scale_to_system(const LoadSeries& series, double share) {
  if (!(share > 0.0 && share <= 1.0)) {
    throw std::invalid_argument("scale_to_system: share must lie in (0, 1]");
  }
  LoadSeries out = series;
  if (share != 1.0) out.values /= share;
  return out;
}

void write_scenarios_csv(const ErrorScenarioSet& set, const std::filesystem::path& path) {
  csv::Writer out(path, "scenario,period_index,err_kwh,prob");
  for (Eigen::Index s = 0; s < set.num_scenarios(); ++s) {
    for (Eigen::Index t = 0; t < set.num_periods(); ++t) {
      out.row(static_cast<long long>(s), static_cast<long long>(set.start + t), set.errors(s, t),
              set.probabilities[s]);
    }
  }
  out.close();
}

ErrorScenarioSet read_scenarios_csv(const std::filesystem::path& path) {
  const auto rows = csv::read(path, "scenario,period_index,err_kwh,prob");
  if (rows.empty()) throw std::invalid_argument(path.string() + ": no scenarios");
  std::map<long long, std::map<long long, double>> errs;
  std::map<long long, double> probs;
  for (const auto& row : rows) {
    if (row.size() != 4) throw std::invalid_argument(path.string() + ": expected 4 fields");
    const long long s = csv::to_int(row[0]);
    if (!errs[s].emplace(csv::to_int(row[1]), csv::to_double(row[2])).second) {
      throw std::invalid_argument(path.string() + ": duplicate scenario row");
    }
    probs[s] = csv::to_double(row[3]);
  }
  ErrorScenarioSet set;
  const auto periods = static_cast<Eigen::Index>(errs.begin()->second.size());
  set.start = errs.begin()->second.begin()->first;
  set.errors.resize(static_cast<Eigen::Index>(errs.size()), periods);
  set.probabilities.resize(static_cast<Eigen::Index>(errs.size()));
  Eigen::Index s = 0;
  for (const auto& [id, series] : errs) {
    if (static_cast<Eigen::Index>(series.size()) != periods ||
        series.begin()->first != set.start) {
      throw std::invalid_argument(path.string() + ": scenarios cover different periods");
    }
    Eigen::Index t = 0;
    for (const auto& [period, err] : series) {
      if (period != set.start + t) throw std::invalid_argument(path.string() + ": period gap");
      set.errors(s, t++) = err;
    }
    set.probabilities[s++] = probs[id];
  }
  if (std::abs(set.probabilities.sum() - 1.0) > 1e-9 || (set.probabilities.array() <= 0).any()) {
    throw std::invalid_argument(path.string() + ": probabilities must be positive and sum to 1");
  }
  return set;
}

}  // namespace smval
