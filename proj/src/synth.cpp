#include "smval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "smval/csv.hpp"
#include "smval/metrics.hpp"
#include "smval/random.hpp"

namespace smval {
namespace {

// Gaussian bump over the settlement periods of a day, wrapping at midnight.
double bump(double period, double centre, double width) {
  double d = std::abs(period - centre);
  d = std::min(d, kPeriodsPerDay - d);
  return std::exp(-0.5 * d * d / (width * width));
}

std::string meter_name(int m) {
  std::string digits = std::to_string(m);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "m" + digits;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_meters < 1) throw std::invalid_argument("SynthConfig: n_meters must be >= 1");
  if (n_weeks < 4) throw std::invalid_argument("SynthConfig: n_weeks must be >= 4");
  if (!(pv_fraction >= 0.0 && pv_fraction <= 1.0) || !(ev_fraction >= 0.0 && ev_fraction <= 1.0)) {
    throw std::invalid_argument("SynthConfig: fractions must lie in [0, 1]");
  }
  if (!(base_load > 0.0) || morning_peak < 0.0 || evening_peak < 0.0 || noise < 0.0) {
    throw std::invalid_argument("SynthConfig: shape parameters must be non-negative");
  }
}

std::vector<MeterTraits> meter_traits(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<MeterTraits> traits(static_cast<std::size_t>(cfg.n_meters));
  for (int m = 0; m < cfg.n_meters; ++m) {
    Rng rng(derive_seed(derive_seed(cfg.seed, "traits"), static_cast<std::uint64_t>(m)));
    MeterTraits& t = traits[static_cast<std::size_t>(m)];
    t.evening_peak = uniform_open(rng) < 0.5;
    t.pv = uniform_open(rng) < cfg.pv_fraction;
    t.ev = uniform_open(rng) < cfg.ev_fraction;
    t.scale = std::exp(0.3 * standard_normal(rng));
    t.pv_share = 0.2 + 0.4 * uniform_open(rng);
  }
  return traits;
}

MeterPanel generate_panel(const SynthConfig& cfg) {
  const auto traits = meter_traits(cfg);
  const Eigen::Index periods = static_cast<Eigen::Index>(cfg.n_weeks) * kPeriodsPerWeek;
  const Eigen::Index days = periods / kPeriodsPerDay;

  // Weather shared by all meters: a slow AR(1) demand factor and daily
  // irradiance.
  Eigen::VectorXd demand_factor(days), sun(days);
  {
    Rng rng(derive_seed(cfg.seed, "weather"));
    double ar = 0.0;
    for (Eigen::Index d = 0; d < days; ++d) {
      ar = 0.8 * ar + 0.06 * standard_normal(rng);
      demand_factor[d] = 1.0 + ar;
      sun[d] = 0.4 + 0.6 * uniform_open(rng);
    }
  }

  Eigen::MatrixXd loads(cfg.n_meters, periods);
  std::vector<std::string> ids;
  for (int m = 0; m < cfg.n_meters; ++m) {
    const MeterTraits& tr = traits[static_cast<std::size_t>(m)];
    ids.push_back(meter_name(m));
    Rng rng(derive_seed(derive_seed(cfg.seed, "load"), static_cast<std::uint64_t>(m)));
    const double morning = tr.evening_peak ? cfg.morning_peak : 0.2 * cfg.morning_peak;
    const double evening = tr.evening_peak ? cfg.evening_peak : 0.2 * cfg.evening_peak;

    Eigen::VectorXd consumption(periods);
    for (Eigen::Index t = 0; t < periods; ++t) {
      const CalendarSlot slot = calendar_slot(cfg.start + t);
      const double sp = slot.settlement_period - 1;
      const bool weekend = slot.day_of_week >= 6;
      const double shift = weekend ? cfg.weekend_shift : 0.0;
      const double night = 0.6 + 0.4 * (1.0 - bump(sp, 8.0, 6.0));
      double shape = cfg.base_load * night + morning * bump(sp, 15.0 + shift, 2.5) +
                     evening * bump(sp, 37.0, 3.5);
      if (weekend) shape *= 1.08;
      const double eps = cfg.noise * standard_normal(rng);
      consumption[t] = tr.scale * shape * demand_factor[t / kPeriodsPerDay] *
                       std::exp(eps - 0.5 * cfg.noise * cfg.noise);
    }
    Eigen::VectorXd net = consumption;
    // PV: a midday bell sized so that its energy is pv_share of the household
    // consumption on an average-sun day; the weekly net total stays positive.
    if (tr.pv) {
      double bell_sum = 0.0;
      for (int sp = 0; sp < kPeriodsPerDay; ++sp) bell_sum += bump(sp, 26.0, 4.0);
      const double daily_consumption = consumption.sum() / static_cast<double>(days);
      const double peak = tr.pv_share * daily_consumption / (0.7 * bell_sum);
      for (Eigen::Index t = 0; t < periods; ++t) {
        const double sp = static_cast<double>(t % kPeriodsPerDay);
        net[t] -= peak * sun[t / kPeriodsPerDay] * bump(sp, 26.0, 4.0);
      }
    }
    // EV: a charging block on most evenings at 1.8 kWh per period.
    if (tr.ev) {
      for (Eigen::Index d = 0; d < days; ++d) {
        if (uniform_open(rng) > 0.7) continue;
        const auto begin = d * kPeriodsPerDay + 36 + static_cast<Eigen::Index>(rng() % 9);
        const auto length = 2 + static_cast<Eigen::Index>(rng() % 5);
        for (Eigen::Index t = begin; t < std::min(periods, begin + length); ++t) net[t] += 1.8;
      }
    }
    loads.row(m) = net.transpose();
  }
  return MeterPanel(std::move(ids), cfg.start, std::move(loads));
}

ConsumerGroup make_group(const MeterPanel& panel, std::vector<Eigen::Index> rows, std::string label,
                         const DlcProfile& system) {
  if (rows.empty()) throw std::invalid_argument("make_group: empty group");
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  ConsumerGroup g;
  g.label = std::move(label);
  const MeterPanel sub = panel.subset(rows);
  g.rows = std::move(rows);
  g.meter_ids = sub.meter_ids();
  g.dlc = compute_dlc(sub);
  g.kld_vs_system = kld_profiles(g.dlc, system);
  return g;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= number of points");
  KMeansResult r;
  r.centroids.resize(k, points.cols());

  // k-means++ seeding: each further centre is drawn with probability
  // proportional to its squared distance from the nearest centre so far.
  Rng rng(seed);
  std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
  for (int c = 0; c < k; ++c) {
    r.centroids.row(c) = points.row(pick);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = nearest[static_cast<std::size_t>(i)];
      d = std::min(d, (points.row(i) - r.centroids.row(c)).squaredNorm());
      total += d;
    }
    if (total <= 0.0) {
      pick = (pick + 1) % n;  // every point coincides with a centre
      continue;
    }
    double target = uniform_open(rng) * total;
    pick = std::max_element(nearest.begin(), nearest.end()) - nearest.begin();
    for (Eigen::Index i = 0; i < n; ++i) {
      target -= nearest[static_cast<std::size_t>(i)];
      if (target < 0.0 && nearest[static_cast<std::size_t>(i)] > 0.0) {
        pick = i;
        break;
      }
    }
  }

  r.assignment.assign(static_cast<std::size_t>(n), -1);
  for (r.iterations = 0; r.iterations < 300; ++r.iterations) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (r.centroids.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
      auto& a = r.assignment[static_cast<std::size_t>(i)];
      if (a != static_cast<int>(best)) {
        a = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = r.assignment[static_cast<std::size_t>(i)];
      sums.row(a) += points.row(i);
      ++counts[static_cast<std::size_t>(a)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        r.centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      Eigen::Index far = 0;
      double worst = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d =
            (points.row(i) - r.centroids.row(r.assignment[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > worst) {
          worst = d;
          far = i;
        }
      }
      r.centroids.row(c) = points.row(far);
    }
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sse += (points.row(i) - r.centroids.row(r.assignment[static_cast<std::size_t>(i)])).squaredNorm();
    }
    r.sse_history.push_back(sse);
  }
  return r;
}

std::vector<ConsumerGroup> kmeans_groups(const MeterPanel& panel, int k, std::uint64_t seed) {
  if (k < 1 || k > panel.num_meters()) {
    throw std::invalid_argument("kmeans_groups: k must lie in [1, number of meters]");
  }
  const KMeansResult km = kmeans(meter_weekly_profiles(panel), k, seed);
  const DlcProfile system = compute_dlc(panel);
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < panel.num_meters(); ++i) {
    members[static_cast<std::size_t>(km.assignment[static_cast<std::size_t>(i)])].push_back(i);
  }
  std::vector<ConsumerGroup> groups;
  for (auto& rows : members) {
    if (!rows.empty()) groups.push_back(make_group(panel, std::move(rows), "", system));
  }
  std::stable_sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return a.kld_vs_system < b.kld_vs_system;
  });
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g].label = g < 26 ? std::string(1, static_cast<char>('A' + g)) : "G" + std::to_string(g);
  }
  return groups;
}

ConsumerGroup sample_group(const MeterPanel& panel, double share, std::uint64_t seed) {
  if (!(share > 0.0 && share <= 1.0)) throw std::invalid_argument("sample_group: share must lie in (0, 1]");
  const Eigen::Index n = panel.num_meters();
  const auto size = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::ceil(share * static_cast<double>(n) - 1e-9)), 1, n);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  Rng rng(seed);
  for (Eigen::Index i = 0; i < size; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n - i));
    std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
  }
  rows.resize(static_cast<std::size_t>(size));
  return make_group(panel, std::move(rows), "share", compute_dlc(panel));
}

void write_group_manifest(const std::vector<ConsumerGroup>& groups,
                          const std::filesystem::path& path) {
  csv::Writer out(path, "meter_id,group");
  for (const auto& g : groups) {
    for (const auto& id : g.meter_ids) out.row(id, g.label);
  }
  out.close();
}

}  // namespace smval
