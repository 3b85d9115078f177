#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

namespace smval {

struct Bid {
  double volume;  // MWh
  double price;   // currency / MWh
};

/// Step price curve on a uniform demand grid. Level b covers demand within
/// delta/2 of levels[b].
struct PriceCurve {
  Eigen::VectorXd levels;  // MWh, strictly increasing, uniform spacing
  Eigen::VectorXd prices;
  double delta = 0.0;

  Eigen::Index size() const { return levels.size(); }
  double lowest_demand() const { return levels[0] - 0.5 * delta; }
  double highest_demand() const { return levels[levels.size() - 1] + 0.5 * delta; }
  bool covers(double lo, double hi) const;
};

/// Validates spacing and lengths; throws on violation.
PriceCurve make_curve(Eigen::VectorXd levels, Eigen::VectorXd prices, double delta);

/// Resamples a supply ladder onto the grid origin + delta, origin + 2 delta, ...
/// Each level takes the marginal price of the bid whose cumulative volume
/// bracket (left-open, right-closed) contains it. Prices must not decrease.
PriceCurve build_curve(const std::vector<Bid>& ladder, double delta, double origin = 0.0);

/// Price of the level nearest to `demand`; a demand exactly half-way between
/// two levels takes the lower one. Demand outside the grid is an error.
double price_at(const PriceCurve& curve, double demand);
Eigen::Index level_index(const PriceCurve& curve, double demand);

/// Exogenous system volumes the supplier trades against.
struct SystemExogenous {
  Eigen::VectorXd d_sys_base;  // day-ahead system demand per period (MWh)
  Eigen::MatrixXd d_imb_base;  // system imbalance per scenario and period (MWh, signed)
};

/// Parameters of the synthetic market that stands in for historical bid data.
struct MarketParams {
  double system_multiple = 3.0;   // rest-of-system day-ahead demand / supplier forecast
  double da_price = 50.0;         // price at the reference system demand
  int da_levels = 40;
  double bal_price = 55.0;        // balancing price at zero imbalance
  double bal_slope = 40.0;        // price change per unit imbalance / mean forecast
  double imbalance_sd = 0.1;      // system imbalance sd / mean forecast
  double price_spread = 0.1;      // per-scenario balancing price shift sd / bal_price
  int bal_levels = 60;
};

struct Market {
  PriceCurve da_curve;
  std::vector<PriceCurve> bal_curves;  // one per scenario
  SystemExogenous exogenous;
};

/// Builds day-ahead and per-scenario balancing curves whose grids cover every
/// demand reachable with supplier volumes in [lo, hi].
Market synthetic_market(const Eigen::VectorXd& d_fore_mwh, int num_scenarios,
                        double volume_lo, double volume_hi, const MarketParams& params,
                        std::uint64_t seed);

// Ladder CSV `volume_mwh,price`; curve dump CSV `level_mwh,price`.
std::vector<Bid> read_ladder_csv(const std::filesystem::path& path);
void write_curve_csv(const PriceCurve& curve, const std::filesystem::path& path);

}  // namespace smval
