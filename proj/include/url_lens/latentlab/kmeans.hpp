#pragma once

#include <cstdint>
#include <vector>

#include "url_lens/metrics/clustering.hpp"

namespace url_lens::latentlab {

using metrics::Points;

struct KMeansOptions {
  int k = 10;
  int restarts = 20;
  int max_iterations = 300;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<int> labels;
  Points centroids;
  double inertia = 0.0;
  /// Inertia after each assignment step of the winning restart.
  std::vector<double> inertia_trace;
};

/// Lloyd iterations from k-means++ seeds; the restart with the lowest inertia
/// wins. Throws std::invalid_argument when n < k or k < 1.
KMeansResult kmeans(const Points& points, const KMeansOptions& options);

/// Index of the nearest centroid for every point (first on ties).
std::vector<int> assign_nearest(const Points& points, const Points& centroids);

}  // namespace url_lens::latentlab
