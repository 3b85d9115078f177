#include "smval/forecast.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "smval/csv.hpp"
#include "smval/metrics.hpp"
#include "smval/privacy.hpp"
#include "smval/random.hpp"

namespace smval {
namespace {

constexpr double kDivergenceLoss = 1e12;

void check_day_aligned(const LoadSeries& s, const char* what) {
  if (s.start % kPeriodsPerDay != 0 || s.size() % kPeriodsPerDay != 0) {
    throw std::invalid_argument(std::string(what) + ": series must cover whole days");
  }
}

// Fisher-Yates with the raw engine output so the permutation does not depend
// on the standard library's distribution implementations.
void shuffle(std::vector<Eigen::Index>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

MlpModel init_model(Eigen::Index inputs, Rng& rng) {
  MlpModel m(inputs, kHiddenUnits);
  const double a1 = std::sqrt(6.0 / static_cast<double>(inputs + kHiddenUnits));
  const double a2 = std::sqrt(6.0 / static_cast<double>(kHiddenUnits + 1));
  for (Eigen::Index h = 0; h < m.hidden(); ++h) {
    for (Eigen::Index i = 0; i < m.inputs(); ++i) m.w1(h, i) = a1 * (2.0 * uniform_open(rng) - 1.0);
    m.b1[h] = 0.1;
    m.w2[h] = a2 * (2.0 * uniform_open(rng) - 1.0);
  }
  m.b2 = 0.0;
  return m;
}

double predict_standardized(const MlpModel& model, const Eigen::RowVectorXd& z) {
  double out = model.b2;
  for (Eigen::Index h = 0; h < model.hidden(); ++h) {
    const double pre = model.w1.row(h).dot(z) + model.b1[h];
    if (pre > 0.0) out += model.w2[h] * pre;
  }
  return out;
}

}  // namespace

Eigen::VectorXd FeatureVector::encode() const {
  Eigen::VectorXd x(3 + lags.size());
  x << week_of_year, day_of_week, settlement_period, lags[0], lags[1], lags[2], lags[3], lags[4];
  return x;
}

FeatureVector build_features(const LoadSeries& history, std::int64_t t) {
  const std::int64_t local = t - history.start;
  if (local < kLagOffsets.back()) {
    throw std::invalid_argument("build_features: period " + std::to_string(t) +
                                " lacks three days of history");
  }
  if (local - kLagOffsets.front() >= history.size()) {
    throw std::invalid_argument("build_features: period beyond the history");
  }
  const CalendarSlot slot = calendar_slot(t);
  FeatureVector x;
  x.week_of_year = slot.week_of_year;
  x.day_of_week = slot.day_of_week;
  x.settlement_period = slot.settlement_period;
  for (std::size_t k = 0; k < kLagOffsets.size(); ++k) {
    x.lags[k] = history.values[static_cast<Eigen::Index>(local - kLagOffsets[k])];
  }
  return x;
}

MlpModel train(const TrainingSet& data, const TrainConfig& cfg,
               std::vector<double>* epoch_losses, int min_samples) {
  const Eigen::Index n = data.features.rows();
  if (min_samples < 0) min_samples = cfg.min_samples;
  if (n < min_samples) {
    throw std::invalid_argument("train: " + std::to_string(n) + " samples, need " +
                                std::to_string(min_samples));
  }
  if (data.targets.size() != n) throw std::invalid_argument("train: target count mismatch");
  if (!data.features.allFinite() || !data.targets.allFinite()) {
    throw std::invalid_argument("train: non-finite training data");
  }
  if (cfg.learning_rate <= 0 || cfg.epochs <= 0 || cfg.batch_size <= 0) {
    throw std::invalid_argument("train: configuration values must be positive");
  }

  Rng rng(cfg.seed);
  MlpModel model = init_model(data.features.cols(), rng);
  model.feature_mean = data.features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.features.rowwise() - model.feature_mean.transpose();
  model.feature_std = (centered.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  for (Eigen::Index i = 0; i < model.feature_std.size(); ++i) {
    if (!(model.feature_std[i] > 1e-12)) model.feature_std[i] = 1.0;
  }
  model.target_mean = data.targets.mean();
  model.target_std = std::sqrt((data.targets.array() - model.target_mean).square().mean());
  if (!(model.target_std > 1e-12)) model.target_std = 1.0;

  const Eigen::MatrixXd z = model.standardize(data.features);
  const Eigen::VectorXd y = (data.targets.array() - model.target_mean) / model.target_std;

  double loss = mlp_loss(model, z, y);
  if (!std::isfinite(loss) || loss > kDivergenceLoss) {
    throw std::runtime_error("train: initial loss diverged");
  }
  if (epoch_losses) epoch_losses->assign(1, loss);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  double lr = cfg.learning_rate;
  int stale = 0;
  Eigen::MatrixXd zb(batch, z.cols());
  Eigen::VectorXd yb(batch);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Eigen::VectorXd saved = model.parameters();
    shuffle(order, rng);
    Eigen::VectorXd params = saved;
    for (Eigen::Index first = 0; first + batch <= n; first += batch) {
      for (Eigen::Index r = 0; r < batch; ++r) {
        zb.row(r) = z.row(order[static_cast<std::size_t>(first + r)]);
        yb[r] = y[order[static_cast<std::size_t>(first + r)]];
      }
      params -= lr * mlp_gradient(model, zb, yb);
      model.set_parameters(params);
    }
    const double next = mlp_loss(model, z, y);
    if (!std::isfinite(next) || next > loss) {
      if (std::isfinite(next) && next > kDivergenceLoss && lr <= 1e-12) {
        throw std::runtime_error("train: loss diverged");
      }
      model.set_parameters(saved);
      lr *= 0.5;
      if (lr < 1e-10) break;
      ++stale;
    } else {
      stale = (loss - next) > cfg.tolerance * std::max(loss, 1e-12) ? 0 : stale + 1;
      loss = next;
    }
    if (epoch_losses) epoch_losses->push_back(loss);
    if (stale >= cfg.patience) break;
  }
  return model;
}

double predict(const MlpModel& model, const Eigen::VectorXd& raw_features) {
  if (raw_features.size() != model.inputs()) throw std::invalid_argument("predict: feature width");
  const Eigen::RowVectorXd z = ((raw_features - model.feature_mean).array() /
                                model.feature_std.array()).matrix().transpose();
  return predict_standardized(model, z) * model.target_std + model.target_mean;
}

double predict(const MlpModel& model, const FeatureVector& x) { return predict(model, x.encode()); }

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto write_vec = [&](const char* tag, const Eigen::VectorXd& v) {
    out << tag;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << csv::format(v[i]);
    out << '\n';
  };
  out << "smval-mlp 1\n";
  out << "layers " << model.inputs() << ' ' << model.hidden() << " 1\n";
  write_vec("feature_mean", model.feature_mean);
  write_vec("feature_std", model.feature_std);
  out << "target " << csv::format(model.target_mean) << ' ' << csv::format(model.target_std) << '\n';
  Eigen::VectorXd w1(model.w1.size());
  for (Eigen::Index h = 0, k = 0; h < model.hidden(); ++h)
    for (Eigen::Index i = 0; i < model.inputs(); ++i) w1[k++] = model.w1(h, i);
  write_vec("w1", w1);
  write_vec("b1", model.b1);
  write_vec("w2", model.w2);
  out << "b2 " << csv::format(model.b2) << '\n';
  if (!out) throw std::runtime_error("error writing " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  auto expect_line = [&](const std::string& tag) {
    if (!std::getline(in, line)) throw std::invalid_argument(path.string() + ": truncated model");
    std::istringstream ss(line);
    std::string got;
    ss >> got;
    if (got != tag) throw std::invalid_argument(path.string() + ": expected '" + tag + "'");
    std::vector<double> values;
    std::string field;
    while (ss >> field) values.push_back(csv::to_double(field));
    return values;
  };
  auto as_vec = [&](const std::vector<double>& v, Eigen::Index size) {
    if (static_cast<Eigen::Index>(v.size()) != size) {
      throw std::invalid_argument(path.string() + ": wrong number of values");
    }
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), size));
  };
  if (expect_line("smval-mlp") != std::vector<double>{1.0}) {
    throw std::invalid_argument(path.string() + ": unsupported model version");
  }
  const auto layers = expect_line("layers");
  if (layers.size() != 3 || layers[2] != 1.0) throw std::invalid_argument(path.string() + ": bad layers");
  const auto inputs = static_cast<Eigen::Index>(layers[0]);
  const auto hidden = static_cast<Eigen::Index>(layers[1]);
  MlpModel m(inputs, hidden);
  m.feature_mean = as_vec(expect_line("feature_mean"), inputs);
  m.feature_std = as_vec(expect_line("feature_std"), inputs);
  const auto target = as_vec(expect_line("target"), 2);
  m.target_mean = target[0];
  m.target_std = target[1];
  const auto w1 = as_vec(expect_line("w1"), inputs * hidden);
  for (Eigen::Index h = 0, k = 0; h < hidden; ++h)
    for (Eigen::Index i = 0; i < inputs; ++i) m.w1(h, i) = w1[k++];
  m.b1 = as_vec(expect_line("b1"), hidden);
  m.w2 = as_vec(expect_line("w2"), hidden);
  m.b2 = as_vec(expect_line("b2"), 1)[0];
  return m;
}

SchemeForecast forecast_half_hourly(const LoadSeries& observed, const LoadSeries& truth,
                                    const TrainConfig& cfg) {
  check_day_aligned(observed, "forecast_half_hourly");
  if (truth.start != observed.start || truth.size() != observed.size()) {
    throw std::invalid_argument("forecast_half_hourly: observed and true series differ in span");
  }
  const Eigen::Index length = observed.size();
  const Eigen::Index backtest = kBacktestDays * kPeriodsPerDay;
  const Eigen::Index first = kLagOffsets.back();
  if (length - backtest - first <= 0) {
    throw std::invalid_argument("forecast_half_hourly: history too short for a backtest");
  }

  TrainingSet data;
  data.features.resize(length - backtest - first, 8);
  data.targets.resize(length - backtest - first);
  for (Eigen::Index t = first; t < length - backtest; ++t) {
    data.features.row(t - first) = build_features(observed, observed.start + t).encode().transpose();
    data.targets[t - first] = observed.values[t];
  }

  SchemeForecast out;
  out.model = train(data, cfg);

  Eigen::VectorXd bt(backtest);
  for (Eigen::Index k = 0; k < backtest; ++k) {
    bt[k] = predict(out.model, build_features(observed, observed.start + length - backtest + k));
  }
  out.backtest_forecast = LoadSeries("backtest_forecast", observed.start + length - backtest, bt);
  out.backtest_actual = LoadSeries("backtest_actual", observed.start + length - backtest,
                                   truth.values.tail(backtest));
  out.wape_backtest = wape(out.backtest_actual, out.backtest_forecast);

  Eigen::VectorXd next(kPeriodsPerDay);
  for (Eigen::Index k = 0; k < kPeriodsPerDay; ++k) {
    next[k] = predict(out.model, build_features(observed, observed.end() + k));
  }
  out.forecast = LoadSeries("forecast", observed.end(), next);
  return out;
}

SchemeForecast forecast_daily(const LoadSeries& truth, const DlcProfile& dlc_sys,
                              const TrainConfig& cfg) {
  check_day_aligned(truth, "forecast_daily");
  const Eigen::VectorXd daily = daily_energy(truth);
  const Eigen::Index days = daily.size();
  const int first = kDailyLagOffsets.back();
  const Eigen::Index train_days = days - kBacktestDays - first;
  if (train_days <= 0) throw std::invalid_argument("forecast_daily: history too short");
  const std::int64_t first_day = truth.start / kPeriodsPerDay;

  auto features = [&](Eigen::Index d) {
    const CalendarSlot slot = calendar_slot((first_day + d) * kPeriodsPerDay);
    Eigen::VectorXd x(2 + kDailyLagOffsets.size());
    x[0] = slot.week_of_year;
    x[1] = slot.day_of_week;
    for (std::size_t k = 0; k < kDailyLagOffsets.size(); ++k) {
      x[2 + static_cast<Eigen::Index>(k)] = daily[d - kDailyLagOffsets[k]];
    }
    return x;
  };

  TrainingSet data;
  data.features.resize(train_days, 2 + static_cast<Eigen::Index>(kDailyLagOffsets.size()));
  data.targets.resize(train_days);
  for (Eigen::Index d = first; d < days - kBacktestDays; ++d) {
    data.features.row(d - first) = features(d).transpose();
    data.targets[d - first] = daily[d];
  }

  SchemeForecast out;
  out.model = train(data, cfg, nullptr, cfg.min_samples_daily);

  Eigen::VectorXd bt_daily(kBacktestDays);
  for (Eigen::Index k = 0; k < kBacktestDays; ++k) {
    bt_daily[k] = predict(out.model, features(days - kBacktestDays + k));
  }
  const Eigen::Index backtest = kBacktestDays * kPeriodsPerDay;
  const std::int64_t bt_start = truth.end() - backtest;
  out.backtest_forecast = spread_daily(bt_daily, bt_start, dlc_sys, "backtest_forecast");
  out.backtest_actual = LoadSeries("backtest_actual", bt_start, truth.values.tail(backtest));
  out.wape_backtest = wape(out.backtest_actual, out.backtest_forecast);

  // The target day's lags at offsets {1, 2, 7} all fall inside the history.
  Eigen::VectorXd ext(days + 1);
  ext << daily, 0.0;
  const CalendarSlot slot = calendar_slot(truth.end());
  Eigen::VectorXd x(2 + kDailyLagOffsets.size());
  x[0] = slot.week_of_year;
  x[1] = slot.day_of_week;
  for (std::size_t k = 0; k < kDailyLagOffsets.size(); ++k) {
    x[2 + static_cast<Eigen::Index>(k)] = ext[days - kDailyLagOffsets[k]];
  }
  Eigen::VectorXd next(1);
  next << predict(out.model, x);
  out.forecast = spread_daily(next, truth.end(), dlc_sys, "forecast");
  return out;
}

SchemeForecast forecast_scheme(const SettlementScheme& scheme, const MeterPanel& panel,
                               const DlcProfile& dlc_sys, const TrainConfig& cfg,
                               std::uint64_t seed) {
  TrainConfig run = cfg;
  run.seed = derive_seed(seed, "train");
  const LoadSeries truth = aggregate_panel(panel);
  if (uses_daily_forecast(scheme)) return forecast_daily(truth, dlc_sys, run);
  if (const auto* ddp = std::get_if<HhsDdp>(&scheme)) {
    const LoadSeries noisy = privatize_aggregate(panel, ddp->params, derive_seed(seed, "ddp-noise"));
    return forecast_half_hourly(noisy, truth, run);
  }
  return forecast_half_hourly(truth, truth, run);
}

}  // namespace smval
