#include "url_lens/metrics/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace url_lens::metrics {

namespace {

std::vector<long> histogram(std::span<const int> bins, int n_bins) {
  if (bins.empty()) throw std::invalid_argument("trajectory_entropy: empty trajectory");
  if (n_bins < 1) throw std::invalid_argument("trajectory_entropy: n_bins must be positive");
  std::vector<long> counts(static_cast<std::size_t>(n_bins), 0);
  for (int b : bins) {
    if (b < 0 || b >= n_bins) throw std::invalid_argument("trajectory_entropy: bin index out of range");
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

}  // namespace

double trajectory_entropy(std::span<const int> bins, int n_bins) {
  const auto counts = histogram(bins, n_bins);
  const double n = static_cast<double>(bins.size());
  double h = 0.0;
  for (long c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  // Roundoff can push a near-uniform histogram a few ulps past the bound.
  return std::clamp(h, 0.0, std::log(static_cast<double>(n_bins)));
}

ExplorationMetrics exploration_metrics(std::span<const int> bins, int n_bins) {
  const auto counts = histogram(bins, n_bins);
  long visited = 0;
  for (long c : counts) visited += c > 0 ? 1 : 0;
  return {trajectory_entropy(bins, n_bins), static_cast<double>(visited) / n_bins};
}

}  // namespace url_lens::metrics
