#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "smval/domain.hpp"
#include "smval/random.hpp"

namespace smval {

// Privacy budget epsilon and discount rate gamma. epsilon may be +inf, which
// yields a zero noise scale.
class PrivacyParams {
 public:
  PrivacyParams(double epsilon, double gamma);

  double epsilon() const { return epsilon_; }
  double gamma() const { return gamma_; }

 private:
  double epsilon_;
  double gamma_;
};

/// Per-period global sensitivity: (max_n E_nt - min_n E_nt) / N.
struct SensitivityProfile {
  Eigen::VectorXd delta_f;
};

/// Per-period Laplace scale in kWh.
struct NoiseScale {
  Eigen::VectorXd b;
};

SensitivityProfile global_sensitivity(const MeterPanel& panel);

// b = delta_f / (epsilon * (1 - gamma)). With gamma = 0 this is delta_f / epsilon.
double noise_scale(double delta_f, const PrivacyParams& params);
NoiseScale noise_scale(const SensitivityProfile& sensitivity, const PrivacyParams& params);

// Inverse-CDF Laplace draw: u uniform on (-1/2, 1/2), x = -b sgn(u) ln(1 - 2|u|).
double sample_laplace(double b, Rng& rng);
Eigen::VectorXd sample_laplace(const NoiseScale& scale, std::uint64_t seed);

/// Aggregate load plus independent Laplace(0, b_t) noise per period. The
/// output is not clipped.
LoadSeries privatize_aggregate(const MeterPanel& panel, const PrivacyParams& params,
                               std::uint64_t seed);

/// Decentralized noise: n values G1 - G2 with G1, G2 ~ Gamma(1/n, b). Their sum
/// is Laplace(0, b) distributed.
Eigen::VectorXd gamma_noise_share(double b, int n_meters, std::uint64_t seed);

}  // namespace smval
