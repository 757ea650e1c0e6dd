#pragma once

#include <span>

#include <Eigen/Dense>

namespace url_lens::metrics {

/// One point per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ClusterScores {
  double silhouette = 0.0;
  double davies_bouldin = 0.0;
  double calinski_harabasz = 0.0;
};

/// Labels may be any integers; each distinct value is one cluster. All three
/// scores throw std::invalid_argument for fewer than two clusters or a size mismatch.
double silhouette(const Points& points, std::span<const int> labels);
double davies_bouldin(const Points& points, std::span<const int> labels);
/// Also throws std::invalid_argument for n <= k and std::domain_error
/// ("degenerate clustering") when the within-cluster dispersion is zero.
double calinski_harabasz(const Points& points, std::span<const int> labels);

ClusterScores cluster_scores(const Points& points, std::span<const int> labels);

}  // namespace url_lens::metrics
