#include "smval/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smval/csv.hpp"
#include "smval/random.hpp"

namespace smval {

bool PriceCurve::covers(double lo, double hi) const {
  const double slack = 1e-9 * std::max(1.0, std::abs(delta));
  return lo >= lowest_demand() - slack && hi <= highest_demand() + slack;
}

PriceCurve make_curve(Eigen::VectorXd levels, Eigen::VectorXd prices, double delta) {
  if (levels.size() == 0 || levels.size() != prices.size()) {
    throw std::invalid_argument("PriceCurve: levels and prices must be non-empty and equal length");
  }
  if (!(delta > 0.0)) throw std::invalid_argument("PriceCurve: delta must be > 0");
  const double tol = 1e-9 * std::max(1.0, delta);
  for (Eigen::Index b = 1; b < levels.size(); ++b) {
    if (std::abs(levels[b] - levels[b - 1] - delta) > tol) {
      throw std::invalid_argument("PriceCurve: levels are not uniformly spaced by delta");
    }
  }
  if (!levels.allFinite() || !prices.allFinite()) throw std::invalid_argument("PriceCurve: non-finite entry");
  return PriceCurve{std::move(levels), std::move(prices), delta};
}

PriceCurve build_curve(const std::vector<Bid>& ladder, double delta, double origin) {
  if (ladder.empty()) throw std::invalid_argument("build_curve: empty ladder");
  if (!(delta > 0.0)) throw std::invalid_argument("build_curve: delta must be > 0");
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k].volume > 0.0)) throw std::invalid_argument("build_curve: bid volume must be > 0");
    if (k > 0 && ladder[k].price < ladder[k - 1].price) {
      throw std::invalid_argument("build_curve: ladder prices decrease with volume");
    }
    total += ladder[k].volume;
    cumulative.push_back(total);
  }
  const auto count = static_cast<Eigen::Index>(std::floor(total / delta + 1e-9));
  if (count < 1) throw std::invalid_argument("build_curve: ladder shorter than one grid step");
  Eigen::VectorXd levels(count), prices(count);
  const double tol = 1e-9 * std::max(1.0, total);
  std::size_t k = 0;
  for (Eigen::Index b = 0; b < count; ++b) {
    const double volume = static_cast<double>(b + 1) * delta;
    while (k + 1 < cumulative.size() && volume > cumulative[k] + tol) ++k;
    levels[b] = origin + volume;
    prices[b] = ladder[k].price;
  }
  return make_curve(std::move(levels), std::move(prices), delta);
}

Eigen::Index level_index(const PriceCurve& curve, double demand) {
  if (!curve.covers(demand, demand)) {
    throw std::out_of_range("price_at: demand " + std::to_string(demand) +
                            " outside the curve grid [" + std::to_string(curve.lowest_demand()) +
                            ", " + std::to_string(curve.highest_demand()) + "]");
  }
  // Half-way demand maps to the lower level: ceil(k - 1/2) with k the
  // fractional position.
  const double pos = (demand - curve.levels[0]) / curve.delta;
  const auto b = static_cast<Eigen::Index>(std::ceil(pos - 0.5));
  return std::clamp<Eigen::Index>(b, 0, curve.size() - 1);
}

double price_at(const PriceCurve& curve, double demand) {
  return curve.prices[level_index(curve, demand)];
}

namespace {

// Uniform grid of `n` levels whose brackets exactly span [lo, hi].
std::pair<double, double> grid_for(double lo, double hi, int n) {
  double width = hi - lo;
  if (!(width > 0.0)) width = std::max(1.0, std::abs(lo)) * 1e-3;
  const double margin = 0.5e-6 * width;
  const double delta = (width + 2.0 * margin) / n;
  return {delta, lo - margin - 0.5 * delta};
}

}  // namespace

Market synthetic_market(const Eigen::VectorXd& d_fore_mwh, int num_scenarios, double volume_lo,
                        double volume_hi, const MarketParams& params, std::uint64_t seed) {
  if (d_fore_mwh.size() == 0 || num_scenarios < 1) {
    throw std::invalid_argument("synthetic_market: empty forecast or no scenarios");
  }
  if (params.da_levels < 1 || params.bal_levels < 1) {
    throw std::invalid_argument("synthetic_market: need at least one price level");
  }
  const Eigen::Index periods = d_fore_mwh.size();
  double scale = d_fore_mwh.mean();
  if (!(scale > 0.0)) scale = std::max(d_fore_mwh.cwiseAbs().maxCoeff(), 1e-6);

  Market market;
  market.exogenous.d_sys_base =
      params.system_multiple * d_fore_mwh.cwiseMax(0.25 * scale);
  Rng rng(seed);
  market.exogenous.d_imb_base.resize(num_scenarios, periods);
  for (int s = 0; s < num_scenarios; ++s) {
    for (Eigen::Index t = 0; t < periods; ++t) {
      market.exogenous.d_imb_base(s, t) = params.imbalance_sd * scale * standard_normal(rng);
    }
  }

  // Day-ahead: convex supply stack around the reference system demand.
  {
    const double lo = market.exogenous.d_sys_base.minCoeff() + volume_lo;
    const double hi = market.exogenous.d_sys_base.maxCoeff() + volume_hi;
    const auto [delta, origin] = grid_for(lo, hi, params.da_levels);
    const double reference = (params.system_multiple + 1.0) * scale;
    std::vector<Bid> ladder;
    for (int b = 0; b < params.da_levels; ++b) {
      const double level = origin + (b + 1) * delta;
      const double rel = std::max(0.2, level / reference);
      ladder.push_back({delta, params.da_price * rel * rel});
    }
    market.da_curve = build_curve(ladder, delta, origin);
  }

  // Balancing: linear in the signed system imbalance, shifted per scenario.
  {
    const double lo = market.exogenous.d_imb_base.minCoeff() + volume_lo;
    const double hi = market.exogenous.d_imb_base.maxCoeff() + volume_hi;
    const auto [delta, origin] = grid_for(lo, hi, params.bal_levels);
    std::vector<Bid> ladder;
    for (int f = 0; f < params.bal_levels; ++f) {
      const double level = origin + (f + 1) * delta;
      ladder.push_back({delta, params.bal_price + params.bal_slope * level / scale});
    }
    const PriceCurve base = build_curve(ladder, delta, origin);
    for (int s = 0; s < num_scenarios; ++s) {
      PriceCurve curve = base;
      curve.prices.array() += params.price_spread * params.bal_price * standard_normal(rng);
      market.bal_curves.push_back(std::move(curve));
    }
  }
  return market;
}

std::vector<Bid> read_ladder_csv(const std::filesystem::path& path) {
  std::vector<Bid> ladder;
  for (const auto& row : csv::read(path, "volume_mwh,price")) {
    if (row.size() != 2) throw std::invalid_argument(path.string() + ": expected 2 fields");
    ladder.push_back({csv::to_double(row[0]), csv::to_double(row[1])});
  }
  return ladder;
}

void write_curve_csv(const PriceCurve& curve, const std::filesystem::path& path) {
  csv::Writer out(path, "level_mwh,price");
  for (Eigen::Index b = 0; b < curve.size(); ++b) out.row(curve.levels[b], curve.prices[b]);
  out.close();
}

}  // namespace smval
