#include "smval/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace smval {

double kld_profiles(const DlcProfile& group, const DlcProfile& system) {
  const auto n = group.mu.size();
  if (group.sigma.size() != n || system.mu.size() != n || system.sigma.size() != n) {
    throw std::invalid_argument("kld_profiles: profile lengths differ");
  }
  double total = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double sc = std::max(group.sigma[t], kSigmaFloor);
    const double ss = std::max(system.sigma[t], kSigmaFloor);
    const double dmu = system.mu[t] - group.mu[t];
    total += std::log(ss / sc) + (sc * sc + dmu * dmu) / (2.0 * ss * ss) - 0.5;
  }
  return total;
}

double wape(const Eigen::Ref<const Eigen::VectorXd>& actual,
            const Eigen::Ref<const Eigen::VectorXd>& forecast) {
  if (actual.size() != forecast.size()) throw std::invalid_argument("wape: length mismatch");
  const double denom = actual.sum();
  if (denom == 0.0) throw std::invalid_argument("wape: actual load sums to zero");
  return (actual - forecast).cwiseAbs().sum() / denom;
}

double wape(const LoadSeries& actual, const LoadSeries& forecast) {
  if (actual.start != forecast.start) throw std::invalid_argument("wape: series not aligned");
  return wape(actual.values, forecast.values);
}

}  // namespace smval
