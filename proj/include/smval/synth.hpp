#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "smval/domain.hpp"

namespace smval {

struct SynthConfig {
  int n_meters = 200;
  int n_weeks = 8;
  std::int64_t start = 0;
  double base_load = 0.12;       // kWh per period, before the per-meter scale
  double morning_peak = 0.25;    // added at the morning peak of a peaky meter
  double evening_peak = 0.55;
  int weekend_shift = 3;         // periods the weekend morning peak moves later
  double noise = 0.25;           // sd of the multiplicative lognormal noise
  double pv_fraction = 0.5;
  double ev_fraction = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Fixed per-meter characteristics drawn from the config seed.
struct MeterTraits {
  bool evening_peak = false;  // otherwise flat
  bool pv = false;
  bool ev = false;
  double scale = 1.0;
  double pv_share = 0.0;      // PV energy / consumption
};

std::vector<MeterTraits> meter_traits(const SynthConfig& cfg);

/// Meter ids are "m0000", "m0001", ...; periods cover n_weeks whole weeks
/// starting at cfg.start.
MeterPanel generate_panel(const SynthConfig& cfg);

struct ConsumerGroup {
  std::string label;
  std::vector<Eigen::Index> rows;  // ascending panel rows
  std::vector<std::string> meter_ids;
  DlcProfile dlc;
  double kld_vs_system = 0.0;
};

/// Builds a group from panel rows and scores it against the system profile.
ConsumerGroup make_group(const MeterPanel& panel, std::vector<Eigen::Index> rows,
                         std::string label, const DlcProfile& system);

struct KMeansResult {
  std::vector<int> assignment;
  Eigen::MatrixXd centroids;          // k x features
  std::vector<double> sse_history;    // after each update step
  int iterations = 0;
};

/// Lloyd's algorithm on the rows of `points` from seeded k-means++ centres.
/// Stops when assignments repeat or after 300 iterations; an empty cluster is
/// re-seeded at the row farthest from its assigned centre.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

/// Clusters meters on their average weekly normalized profile. Groups are
/// labelled A, B, ... in ascending order of KLD against the whole panel.
std::vector<ConsumerGroup> kmeans_groups(const MeterPanel& panel, int k, std::uint64_t seed);

/// Uniform random subset of ceil(share * N) meters.
ConsumerGroup sample_group(const MeterPanel& panel, double share, std::uint64_t seed);

// Group manifest CSV `meter_id,group`.
void write_group_manifest(const std::vector<ConsumerGroup>& groups,
                          const std::filesystem::path& path);

}  // namespace smval
