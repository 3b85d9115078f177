#pragma once

#include "smval/domain.hpp"

namespace smval {

inline constexpr double kSigmaFloor = 1e-6;

/// Kullback-Leibler divergence (nats) of the group's per-slot Gaussian from
/// the system's, summed over all 336 half-hour-of-week slots:
///   sum_t ln(s_sys/s_c) + (s_c^2 + (m_sys - m_c)^2) / (2 s_sys^2) - 1/2.
/// Both standard deviations are floored at kSigmaFloor. Not symmetric.
double kld_profiles(const DlcProfile& group, const DlcProfile& system);

/// sum |actual - forecast| / sum actual. The denominator is the signed sum;
/// a zero sum is rejected.
double wape(const Eigen::Ref<const Eigen::VectorXd>& actual,
            const Eigen::Ref<const Eigen::VectorXd>& forecast);
double wape(const LoadSeries& actual, const LoadSeries& forecast);

}  // namespace smval
