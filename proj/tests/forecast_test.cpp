#include "smval/forecast.hpp"

#include <cmath>
#include <filesystem>
#include <random>

#include "gtest/gtest.h"
#include "smval/metrics.hpp"
#include "smval/synth.hpp"

namespace smval {
namespace {

LoadSeries ramp(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return LoadSeries("ramp", 0, v);
}

SynthConfig small_synth() {
  SynthConfig c;
  c.n_meters = 30;
  c.n_weeks = 6;
  c.seed = 5;
  return c;
}

TEST(FeaturesTest, LagOffsets) {
  const LoadSeries r = ramp(400);
  const FeatureVector x = build_features(r, 144);
  EXPECT_EQ(x.lags, (std::array<double, 5>{96, 95, 49, 48, 0}));
  EXPECT_EQ(build_features(r, 145).lags, (std::array<double, 5>{97, 96, 50, 49, 1}));
  const FeatureVector y = build_features(LoadSeries("c", 0, Eigen::VectorXd::Constant(400, 2.5)), 300);
  for (double lag : y.lags) EXPECT_EQ(lag, 2.5);
  EXPECT_EQ(x.encode().size(), 8);
  EXPECT_EQ(x.settlement_period, 1);
  EXPECT_EQ(x.day_of_week, 4);
  EXPECT_THROW(build_features(r, 143), std::invalid_argument);
}

TEST(MlpTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  int checked = 0;
  for (int point = 0; point < 4; ++point) {
    MlpModel m(8, kHiddenUnits);
    Eigen::VectorXd p(m.num_parameters());
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = 0.5 * n(rng);
    m.set_parameters(p);
    Eigen::MatrixXd z(20, 8);
    Eigen::VectorXd y(20);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = n(rng);
    const Eigen::VectorXd g = mlp_gradient(m, z, y);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Eigen::VectorXd up = p, down = p;
      up[i] += h;
      down[i] -= h;
      MlpModel mu = m, md = m;
      mu.set_parameters(up);
      md.set_parameters(down);
      const double fd = (mlp_loss(mu, z, y) - mlp_loss(md, z, y)) / (2 * h);
      EXPECT_LT(std::abs(g[i] - fd) / std::max({1e-6, std::abs(g[i]), std::abs(fd)}), 1e-4) << "param " << i;
      ++checked;
    }
  }
  EXPECT_GE(checked, 100);
}

TrainingSet linear_data(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  TrainingSet data;
  data.features.resize(n, 8);
  data.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    double y = 3.0;
    for (int j = 0; j < 8; ++j) {
      data.features(i, j) = 10.0 * j + (j + 1) * d(rng);
      y += 0.2 * (j - 3) * data.features(i, j);
    }
    data.targets[i] = y;
  }
  return data;
}

TEST(TrainTest, FitsLinearMap) {
  const TrainingSet data = linear_data(400, 1);
  TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.patience = 200;
  cfg.learning_rate = 0.02;
  cfg.batch_size = 16;
  const MlpModel m = train(data, cfg);
  double sse = 0.0;
  for (Eigen::Index i = 0; i < data.targets.size(); ++i) {
    const double e = predict(m, Eigen::VectorXd(data.features.row(i).transpose())) - data.targets[i];
    sse += e * e;
  }
  const double rmse = std::sqrt(sse / static_cast<double>(data.targets.size()));
  const double sd = std::sqrt((data.targets.array() - data.targets.mean()).square().mean());
  EXPECT_LT(rmse, 0.01 * sd);
}

TEST(TrainTest, DeterministicAndLossNonIncreasing) {
  const TrainingSet data = linear_data(200, 2);
  TrainConfig cfg;
  cfg.epochs = 100;
  std::vector<double> a, b;
  const MlpModel m1 = train(data, cfg, &a);
  const MlpModel m2 = train(data, cfg, &b);
  EXPECT_EQ(m1.parameters(), m2.parameters());
  EXPECT_EQ(a, b);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LE(a[i], a[i - 1] + 1e-6);
}

TEST(TrainTest, RejectsBadData) {
  TrainingSet data = linear_data(200, 3);
  data.targets[7] = std::nan("");
  EXPECT_THROW(train(data, TrainConfig{}), std::invalid_argument);
  EXPECT_THROW(train(linear_data(50, 3), TrainConfig{}), std::invalid_argument);
}

TEST(PredictTest, ZeroWeightsGiveBias) {
  MlpModel m(8, kHiddenUnits);
  m.b2 = 1.75;
  EXPECT_EQ(predict(m, Eigen::VectorXd::Random(8)), 1.75);
}

TEST(PredictTest, HandBuiltForwardPass) {
  MlpModel m(2, 1);
  m.w1 << 2.0, -1.0;
  m.b1 << 0.5;
  m.w2 << 3.0;
  m.b2 = -1.0;
  m.feature_mean = Eigen::Vector2d(1.0, 2.0);
  m.feature_std = Eigen::Vector2d(2.0, 4.0);
  m.target_mean = 10.0;
  m.target_std = 2.0;
  // z = (1.5, 0.5); hidden = relu(3 - 0.5 + 0.5) = 3; out = 9 - 1 = 8; 8 * 2 + 10.
  EXPECT_DOUBLE_EQ(predict(m, Eigen::Vector2d(4.0, 4.0)), 26.0);
  // Negative pre-activation is clipped: z = (-1, 0); relu(-2 + 0.5) = 0.
  EXPECT_DOUBLE_EQ(predict(m, Eigen::Vector2d(-1.0, 2.0)), 8.0);
}

TEST(ModelFileTest, RoundTrips) {
  const MlpModel m = train(linear_data(150, 4), TrainConfig{});
  const auto path = std::filesystem::temp_directory_path() / "smval_model_test.txt";
  save_model(m, path);
  const MlpModel back = load_model(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.parameters(), m.parameters());
  EXPECT_EQ(back.feature_mean, m.feature_mean);
  EXPECT_EQ(back.feature_std, m.feature_std);
  EXPECT_EQ(back.target_mean, m.target_mean);
  EXPECT_EQ(back.target_std, m.target_std);
}

TEST(SchemeForecastTest, HugeEpsilonMatchesEhh) {
  const MeterPanel panel = generate_panel(small_synth());
  const DlcProfile sys = compute_dlc(panel);
  const SchemeForecast ehh = forecast_scheme(HhsEhh{}, panel, sys, TrainConfig{}, 4);
  const SchemeForecast ddp = forecast_scheme(HhsDdp{PrivacyParams(1e12, 0.75)}, panel, sys, TrainConfig{}, 4);
  EXPECT_EQ(ehh.forecast.size(), 48);
  EXPECT_EQ(ehh.forecast.start, panel.start() + panel.num_periods());
  EXPECT_LT((ehh.forecast.values - ddp.forecast.values).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(ehh.backtest_actual.size(), kBacktestDays * 48);
}

TEST(SchemeForecastTest, DailySchemesShareTheForecast) {
  const MeterPanel panel = generate_panel(small_synth());
  const DlcProfile sys = compute_dlc(panel);
  const SchemeForecast a = forecast_scheme(Nhhs{}, panel, sys, TrainConfig{}, 8);
  const SchemeForecast b = forecast_scheme(HhsDlcSys{}, panel, sys, TrainConfig{}, 8);
  EXPECT_EQ(a.forecast.values, b.forecast.values);
  EXPECT_EQ(a.wape_backtest, b.wape_backtest);
  // Daily totals of the spread forecast equal the daily prediction.
  EXPECT_NEAR(daily_energy(a.backtest_forecast).sum(), a.backtest_forecast.values.sum(), 1e-9);
}

TEST(SchemeForecastTest, ShiftedPeakFavoursHalfHourlyData) {
  const MeterPanel system = generate_panel(small_synth());
  // The group consumes like the system but three hours later.
  Eigen::MatrixXd shifted(system.num_meters(), system.num_periods());
  const Eigen::Index n = system.num_periods();
  for (Eigen::Index t = 0; t < n; ++t) shifted.col((t + 6) % n) = system.loads().col(t);
  const MeterPanel group(system.meter_ids(), system.start(), shifted);
  const DlcProfile sys = compute_dlc(system);
  const double ehh = forecast_scheme(HhsEhh{}, group, sys, TrainConfig{}, 1).wape_backtest;
  const double dlcsys = forecast_scheme(HhsDlcSys{}, group, sys, TrainConfig{}, 1).wape_backtest;
  EXPECT_LT(ehh, dlcsys);
}

TEST(SchemeForecastTest, DeterministicGivenSeed) {
  const MeterPanel panel = generate_panel(small_synth());
  const DlcProfile sys = compute_dlc(panel);
  const SettlementScheme ddp = HhsDdp{PrivacyParams(0.5, 0.75)};
  EXPECT_EQ(forecast_scheme(ddp, panel, sys, TrainConfig{}, 3).forecast.values,
            forecast_scheme(ddp, panel, sys, TrainConfig{}, 3).forecast.values);
}

}  // namespace
}  // namespace smval
