#include "smval/domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "smval/csv.hpp"
#include "smval/scheme.hpp"

namespace smval {
namespace {

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t m) {
  return (a - floor_mod(a, m)) / m;
}

// Offset of the first whole week and the number of whole weeks in
// [start, start + length).
std::pair<Eigen::Index, Eigen::Index> whole_weeks(std::int64_t start, Eigen::Index length) {
  const std::int64_t first = floor_mod(-start, kPeriodsPerWeek);
  if (first >= length) return {0, 0};
  return {static_cast<Eigen::Index>(first),
          static_cast<Eigen::Index>((length - first) / kPeriodsPerWeek)};
}

DlcProfile dlc_from_weeks(const Eigen::Ref<const Eigen::VectorXd>& values,
                          Eigen::Index offset, Eigen::Index weeks) {
  Eigen::MatrixXd shares(weeks, kPeriodsPerWeek);
  for (Eigen::Index w = 0; w < weeks; ++w) {
    const auto week = values.segment(offset + w * kPeriodsPerWeek, kPeriodsPerWeek);
    const double total = week.sum();
    if (!(total > 0.0)) {
      throw std::invalid_argument("compute_dlc: week " + std::to_string(w) +
                                  " has non-positive total energy");
    }
    shares.row(w) = week.transpose() / total;
  }
  DlcProfile dlc;
  dlc.mu = shares.colwise().mean().transpose();
  const Eigen::MatrixXd centered = shares.rowwise() - dlc.mu.transpose();
  dlc.sigma = (centered.colwise().squaredNorm() / static_cast<double>(weeks - 1))
                  .cwiseSqrt()
                  .transpose();
  return dlc;
}

}  // namespace

CalendarSlot calendar_slot(std::int64_t period_index) {
  const std::int64_t day = floor_div(period_index, kPeriodsPerDay);
  const std::int64_t week = floor_div(period_index, kPeriodsPerWeek);
  CalendarSlot slot;
  slot.week_of_year = static_cast<int>(floor_mod(week, 52)) + 1;
  slot.day_of_week = static_cast<int>(floor_mod(day, kDaysPerWeek)) + 1;
  slot.settlement_period = static_cast<int>(floor_mod(period_index, kPeriodsPerDay)) + 1;
  slot.slot_of_week = static_cast<int>(floor_mod(period_index, kPeriodsPerWeek));
  return slot;
}

LoadSeries::LoadSeries(std::string id, std::int64_t first_period, Eigen::VectorXd v)
    : meter_id(std::move(id)), start(first_period), values(std::move(v)) {
  if (values.size() == 0) throw std::invalid_argument("LoadSeries: empty series");
}

MeterPanel::MeterPanel(std::vector<std::string> meter_ids, std::int64_t start,
                       Eigen::MatrixXd loads)
    : ids_(std::move(meter_ids)), start_(start), loads_(std::move(loads)) {
  if (loads_.rows() == 0 || loads_.cols() == 0) {
    throw std::invalid_argument("MeterPanel: panel must hold at least one meter and period");
  }
  if (static_cast<Eigen::Index>(ids_.size()) != loads_.rows()) {
    throw std::invalid_argument("MeterPanel: id count does not match rows");
  }
  if (!loads_.allFinite()) throw std::invalid_argument("MeterPanel: non-finite reading");
}

MeterPanel MeterPanel::from_series(std::span<const LoadSeries> series) {
  if (series.empty()) throw std::invalid_argument("MeterPanel: no series");
  const auto start = series.front().start;
  const auto length = series.front().size();
  Eigen::MatrixXd loads(static_cast<Eigen::Index>(series.size()), length);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].start != start || series[i].size() != length) {
      throw std::invalid_argument("MeterPanel: series " + series[i].meter_id +
                                  " is not time-aligned");
    }
    loads.row(static_cast<Eigen::Index>(i)) = series[i].values.transpose();
    ids.push_back(series[i].meter_id);
  }
  return MeterPanel(std::move(ids), start, std::move(loads));
}

LoadSeries MeterPanel::meter(Eigen::Index row) const {
  return LoadSeries(ids_.at(static_cast<std::size_t>(row)), start_, loads_.row(row).transpose());
}

MeterPanel MeterPanel::subset(std::vector<Eigen::Index> rows) const {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  if (rows.empty()) throw std::invalid_argument("MeterPanel::subset: empty selection");
  Eigen::MatrixXd loads(static_cast<Eigen::Index>(rows.size()), loads_.cols());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= loads_.rows()) {
      throw std::out_of_range("MeterPanel::subset: row out of range");
    }
    loads.row(static_cast<Eigen::Index>(i)) = loads_.row(rows[i]);
    ids.push_back(ids_[static_cast<std::size_t>(rows[i])]);
  }
  return MeterPanel(std::move(ids), start_, std::move(loads));
}

MeterPanel MeterPanel::periods(Eigen::Index offset, Eigen::Index count) const {
  if (offset < 0 || count <= 0 || offset + count > loads_.cols()) {
    throw std::out_of_range("MeterPanel::periods: window outside panel");
  }
  return MeterPanel(ids_, start_ + offset, loads_.middleCols(offset, count));
}

LoadSeries aggregate_panel(const MeterPanel& panel) {
  // Row-by-row accumulation keeps the summation order fixed (meter 0 first).
  Eigen::VectorXd total = panel.loads().row(0).transpose();
  for (Eigen::Index n = 1; n < panel.num_meters(); ++n) {
    total += panel.loads().row(n).transpose();
  }
  return LoadSeries("aggregate", panel.start(), std::move(total));
}

Eigen::VectorXd daily_energy(const LoadSeries& series) {
  if (series.size() % kPeriodsPerDay != 0) {
    throw std::invalid_argument("daily_energy: series ends with a partial day");
  }
  const Eigen::Index days = series.size() / kPeriodsPerDay;
  Eigen::VectorXd out(days);
  for (Eigen::Index d = 0; d < days; ++d) {
    out[d] = series.values.segment(d * kPeriodsPerDay, kPeriodsPerDay).sum();
  }
  return out;
}

DlcProfile compute_dlc(const LoadSeries& aggregate) {
  const auto [offset, weeks] = whole_weeks(aggregate.start, aggregate.size());
  if (weeks < 2) throw std::invalid_argument("compute_dlc: need at least two whole weeks");
  return dlc_from_weeks(aggregate.values, offset, weeks);
}

DlcProfile compute_dlc(const MeterPanel& panel) {
  return compute_dlc(aggregate_panel(panel));
}

Eigen::MatrixXd meter_weekly_profiles(const MeterPanel& panel) {
  const auto [offset, weeks] = whole_weeks(panel.start(), panel.num_periods());
  if (weeks < 1) throw std::invalid_argument("meter_weekly_profiles: no whole week");
  Eigen::MatrixXd out(panel.num_meters(), kPeriodsPerWeek);
  for (Eigen::Index n = 0; n < panel.num_meters(); ++n) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(kPeriodsPerWeek);
    for (Eigen::Index w = 0; w < weeks; ++w) {
      const auto week = panel.loads().row(n).segment(offset + w * kPeriodsPerWeek,
                                                     kPeriodsPerWeek);
      const double total = week.sum();
      if (!(total > 0.0)) {
        throw std::invalid_argument("meter_weekly_profiles: meter " +
                                    panel.meter_ids()[static_cast<std::size_t>(n)] +
                                    " has a week with non-positive energy");
      }
      acc += week / total;
    }
    out.row(n) = acc / static_cast<double>(weeks);
  }
  return out;
}

LoadSeries spread_daily(const Eigen::VectorXd& daily, std::int64_t start,
                        const DlcProfile& dlc, std::string meter_id) {
  if (floor_mod(start, kPeriodsPerDay) != 0) {
    throw std::invalid_argument("spread_daily: start is not a day boundary");
  }
  if (dlc.mu.size() != kPeriodsPerWeek) throw std::invalid_argument("spread_daily: bad profile");
  Eigen::VectorXd out(daily.size() * kPeriodsPerDay);
  for (Eigen::Index d = 0; d < daily.size(); ++d) {
    const std::int64_t first = start + d * kPeriodsPerDay;
    const int slot = calendar_slot(first).slot_of_week;
    const auto shape = dlc.mu.segment(slot, kPeriodsPerDay);
    const double mass = shape.sum();
    if (!(mass > 0.0)) throw std::invalid_argument("spread_daily: profile day has no mass");
    out.segment(d * kPeriodsPerDay, kPeriodsPerDay) = daily[d] * (shape / mass);
  }
  return LoadSeries(std::move(meter_id), start, std::move(out));
}

MeterPanel read_meter_csv(const std::filesystem::path& path) {
  const auto rows = csv::read(path, "meter_id,period_index,kwh");
  if (rows.empty()) throw std::invalid_argument(path.string() + ": no readings");
  std::map<std::string, std::map<long long, double>> readings;
  long long lo = rows.front().size() > 1 ? csv::to_int(rows.front()[1]) : 0;
  long long hi = lo;
  for (const auto& row : rows) {
    if (row.size() != 3) throw std::invalid_argument(path.string() + ": expected 3 fields");
    const long long t = csv::to_int(row[1]);
    if (!readings[row[0]].emplace(t, csv::to_double(row[2])).second) {
      throw std::invalid_argument(path.string() + ": duplicate reading for meter " + row[0] +
                                  " period " + row[1]);
    }
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  const Eigen::Index length = static_cast<Eigen::Index>(hi - lo + 1);
  Eigen::MatrixXd loads(static_cast<Eigen::Index>(readings.size()), length);
  std::vector<std::string> ids;
  Eigen::Index n = 0;
  for (const auto& [id, series] : readings) {
    if (static_cast<Eigen::Index>(series.size()) != length) {
      throw std::invalid_argument(path.string() + ": meter " + id + " is missing " +
                                  std::to_string(length - static_cast<Eigen::Index>(series.size())) +
                                  " periods");
    }
    for (const auto& [t, kwh] : series) loads(n, static_cast<Eigen::Index>(t - lo)) = kwh;
    ids.push_back(id);
    ++n;
  }
  return MeterPanel(std::move(ids), lo, std::move(loads));
}

void write_meter_csv(const MeterPanel& panel, const std::filesystem::path& path) {
  csv::Writer out(path, "meter_id,period_index,kwh");
  for (Eigen::Index n = 0; n < panel.num_meters(); ++n) {
    const auto& id = panel.meter_ids()[static_cast<std::size_t>(n)];
    for (Eigen::Index t = 0; t < panel.num_periods(); ++t) {
      out.row(id, static_cast<long long>(panel.start() + t), panel.loads()(n, t));
    }
  }
  out.close();
}

// -- settlement schemes ---------------------------------------------------

std::string scheme_name(const SettlementScheme& scheme) {
  struct Visitor {
    std::string operator()(const Nhhs&) const { return "nhhs"; }
    std::string operator()(const HhsDlcSys&) const { return "hhs_dlcsys"; }
    std::string operator()(const HhsEhh&) const { return "hhs_ehh"; }
    std::string operator()(const HhsDdp&) const { return "hhs_ddp"; }
  };
  return std::visit(Visitor{}, scheme);
}

SettlementScheme parse_scheme(const std::string& name, const PrivacyParams& params) {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (key == "nhhs") return Nhhs{};
  if (key == "hhs_dlcsys" || key == "dlcsys") return HhsDlcSys{};
  if (key == "hhs_ehh" || key == "ehh") return HhsEhh{};
  if (key == "hhs_ddp" || key == "ddp") return HhsDdp{params};
  throw std::invalid_argument("unknown settlement scheme '" + name + "'");
}

bool uses_daily_forecast(const SettlementScheme& scheme) {
  return std::holds_alternative<Nhhs>(scheme) || std::holds_alternative<HhsDlcSys>(scheme);
}

LoadSeries settled_load(const SettlementScheme& scheme, const LoadSeries& actual_hh,
                        const DlcProfile& dlc_sys) {
  if (!std::holds_alternative<Nhhs>(scheme)) return actual_hh;
  return spread_daily(daily_energy(actual_hh), actual_hh.start, dlc_sys, actual_hh.meter_id);
}

}  // namespace smval
