#pragma once

#include <span>

namespace url_lens::metrics {

struct ExplorationMetrics {
  double trajectory_entropy = 0.0;  // nats
  double coverage_fraction = 0.0;   // visited bins / n_bins
};

/// Natural-log entropy of the visitation histogram over `n_bins` bins.
/// Throws std::invalid_argument on an empty trajectory or an out-of-range bin.
double trajectory_entropy(std::span<const int> bins, int n_bins);

ExplorationMetrics exploration_metrics(std::span<const int> bins, int n_bins);

}  // namespace url_lens::metrics
