#include "smval/privacy.hpp"

#include <cmath>
#include <stdexcept>

namespace smval {

PrivacyParams::PrivacyParams(double epsilon, double gamma) : epsilon_(epsilon), gamma_(gamma) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("PrivacyParams: epsilon must be > 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("PrivacyParams: gamma must lie in [0, 1)");
  }
}

SensitivityProfile global_sensitivity(const MeterPanel& panel) {
  const double n = static_cast<double>(panel.num_meters());
  SensitivityProfile out;
  out.delta_f = ((panel.loads().colwise().maxCoeff() - panel.loads().colwise().minCoeff()) / n)
                    .transpose();
  return out;
}

double noise_scale(double delta_f, const PrivacyParams& params) {
  if (!(delta_f >= 0.0)) throw std::invalid_argument("noise_scale: negative sensitivity");
  if (delta_f == 0.0) return 0.0;
  if (params.gamma() == 0.0) return delta_f / params.epsilon();
  return delta_f / (params.epsilon() * (1.0 - params.gamma()));
}

NoiseScale noise_scale(const SensitivityProfile& sensitivity, const PrivacyParams& params) {
  NoiseScale out;
  out.b = sensitivity.delta_f.unaryExpr([&](double d) { return noise_scale(d, params); });
  return out;
}

double sample_laplace(double b, Rng& rng) {
  const double u = uniform_open(rng) - 0.5;
  const double magnitude = -b * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -magnitude : magnitude;
}

Eigen::VectorXd sample_laplace(const NoiseScale& scale, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd out(scale.b.size());
  for (Eigen::Index t = 0; t < out.size(); ++t) out[t] = sample_laplace(scale.b[t], rng);
  return out;
}

LoadSeries privatize_aggregate(const MeterPanel& panel, const PrivacyParams& params,
                               std::uint64_t seed) {
  LoadSeries out = aggregate_panel(panel);
  const NoiseScale scale = noise_scale(global_sensitivity(panel), params);
  out.values += sample_laplace(scale, seed);
  out.meter_id = "aggregate_ddp";
  return out;
}

Eigen::VectorXd gamma_noise_share(double b, int n_meters, std::uint64_t seed) {
  if (n_meters < 1) throw std::invalid_argument("gamma_noise_share: need at least one meter");
  if (!(b > 0.0)) throw std::invalid_argument("gamma_noise_share: scale must be > 0");
  Rng rng(seed);
  std::gamma_distribution<double> gamma(1.0 / static_cast<double>(n_meters), b);
  Eigen::VectorXd out(n_meters);
  for (int i = 0; i < n_meters; ++i) {
    const double g1 = gamma(rng);
    const double g2 = gamma(rng);
    out[i] = g1 - g2;
  }
  return out;
}

}  // namespace smval
