#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace smval {

inline constexpr int kPeriodsPerDay = 48;
inline constexpr int kDaysPerWeek = 7;
inline constexpr int kPeriodsPerWeek = kPeriodsPerDay * kDaysPerWeek;  // 336

// Period indices are 0-based global half-hour counters. Index 0 is the first
// settlement period of day 1 of week 1; there is no clock-change handling.
struct CalendarSlot {
  int week_of_year;       // 1..52
  int day_of_week;        // 1..7
  int settlement_period;  // 1..48
  int slot_of_week;       // 0..335
};

CalendarSlot calendar_slot(std::int64_t period_index);

/// Half-hourly kWh readings of one meter (or of an aggregate) starting at a
/// global period index. Values may be negative for net load.
struct LoadSeries {
  std::string meter_id;
  std::int64_t start = 0;
  Eigen::VectorXd values;

  LoadSeries() = default;
  LoadSeries(std::string id, std::int64_t first_period, Eigen::VectorXd v);

  Eigen::Index size() const { return values.size(); }
  std::int64_t end() const { return start + values.size(); }
};

/// Time-aligned readings of N meters, stored meters x periods.
class MeterPanel {
 public:
  MeterPanel(std::vector<std::string> meter_ids, std::int64_t start,
             Eigen::MatrixXd loads);

  static MeterPanel from_series(std::span<const LoadSeries> series);

  Eigen::Index num_meters() const { return loads_.rows(); }
  Eigen::Index num_periods() const { return loads_.cols(); }
  std::int64_t start() const { return start_; }
  const std::vector<std::string>& meter_ids() const { return ids_; }
  const Eigen::MatrixXd& loads() const { return loads_; }

  LoadSeries meter(Eigen::Index row) const;

  // Rows are taken in ascending order regardless of the order given, so a
  // subset holding every meter aggregates bit-identically to the panel.
  MeterPanel subset(std::vector<Eigen::Index> rows) const;
  MeterPanel periods(Eigen::Index offset, Eigen::Index count) const;

 private:
  std::vector<std::string> ids_;
  std::int64_t start_;
  Eigen::MatrixXd loads_;
};

/// Mean and standard deviation of the weekly-normalized load in each of the
/// 336 half-hour-of-week slots.
struct DlcProfile {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
};

LoadSeries aggregate_panel(const MeterPanel& panel);

/// Sum of each consecutive block of 48 periods.
Eigen::VectorXd daily_energy(const LoadSeries& series);

/// Per whole week: slot load / weekly total of the aggregate. mu and sigma are
/// the mean and sample standard deviation of that fraction across weeks.
DlcProfile compute_dlc(const MeterPanel& panel);
DlcProfile compute_dlc(const LoadSeries& aggregate);

/// Weekly-normalized 336-slot profile of every meter, averaged across weeks
/// (meters x 336). This is the clustering feature.
Eigen::MatrixXd meter_weekly_profiles(const MeterPanel& panel);

/// Distributes each day's energy over its 48 periods in proportion to the
/// profile's mean for that weekday, renormalized so the day total is kept.
LoadSeries spread_daily(const Eigen::VectorXd& daily, std::int64_t start,
                        const DlcProfile& dlc, std::string meter_id = {});

// Meter CSV: `meter_id,period_index,kwh`. Rows may be in any order; every
// (meter, period) pair in the covered range must be present exactly once.
MeterPanel read_meter_csv(const std::filesystem::path& path);
void write_meter_csv(const MeterPanel& panel, const std::filesystem::path& path);

}  // namespace smval
