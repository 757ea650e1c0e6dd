#include "url_lens/metrics/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace url_lens::metrics {

namespace {

struct Grouping {
  std::vector<int> label;  // compact 0..k-1
  std::vector<long> size;
  Points centroid;
  int k = 0;
};

Grouping group(const Points& points, std::span<const int> labels) {
  if (static_cast<std::size_t>(points.rows()) != labels.size()) {
    throw std::invalid_argument("clustering score: points and labels differ in length");
  }
  std::map<int, int> compact;
  for (int l : labels) compact.emplace(l, 0);
  if (compact.size() < 2) throw std::invalid_argument("clustering score: need at least two clusters");
  Grouping g;
  for (auto& [raw, idx] : compact) idx = g.k++;
  g.size.assign(static_cast<std::size_t>(g.k), 0);
  g.centroid = Points::Zero(g.k, points.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = compact[labels[i]];
    g.label.push_back(c);
    ++g.size[static_cast<std::size_t>(c)];
    g.centroid.row(c) += points.row(static_cast<Eigen::Index>(i));
  }
  for (int c = 0; c < g.k; ++c) g.centroid.row(c) /= static_cast<double>(g.size[static_cast<std::size_t>(c)]);
  return g;
}

}  // namespace

double silhouette(const Points& points, std::span<const int> labels) {
  const Grouping g = group(points, labels);
  const auto n = points.rows();
  std::vector<double> sums(static_cast<std::size_t>(g.k));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(g.label[static_cast<std::size_t>(j)])] += (points.row(i) - points.row(j)).norm();
    }
    const int own = g.label[static_cast<std::size_t>(i)];
    const long own_size = g.size[static_cast<std::size_t>(own)];
    if (own_size < 2) continue;  // singleton scores 0
    const double a = sums[static_cast<std::size_t>(own)] / static_cast<double>(own_size - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < g.k; ++c) {
      if (c == own) continue;
      b = std::min(b, sums[static_cast<std::size_t>(c)] / static_cast<double>(g.size[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double davies_bouldin(const Points& points, std::span<const int> labels) {
  const Grouping g = group(points, labels);
  std::vector<double> scatter(static_cast<std::size_t>(g.k), 0.0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int c = g.label[static_cast<std::size_t>(i)];
    scatter[static_cast<std::size_t>(c)] += (points.row(i) - g.centroid.row(c)).norm();
  }
  for (int c = 0; c < g.k; ++c) scatter[static_cast<std::size_t>(c)] /= static_cast<double>(g.size[static_cast<std::size_t>(c)]);
  double total = 0.0;
  for (int i = 0; i < g.k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < g.k; ++j) {
      if (j == i) continue;
      const double s = scatter[static_cast<std::size_t>(i)] + scatter[static_cast<std::size_t>(j)];
      if (s == 0.0) continue;
      const double m = (g.centroid.row(i) - g.centroid.row(j)).norm();
      worst = std::max(worst, s / std::max(m, 1e-12));
    }
    total += worst;
  }
  return total / g.k;
}

double calinski_harabasz(const Points& points, std::span<const int> labels) {
  const Grouping g = group(points, labels);
  const auto n = points.rows();
  if (n <= g.k) throw std::invalid_argument("calinski_harabasz: need more points than clusters");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  double between = 0.0;
  for (int c = 0; c < g.k; ++c) {
    between += static_cast<double>(g.size[static_cast<std::size_t>(c)]) * (g.centroid.row(c) - mean).squaredNorm();
  }
  double within = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    within += (points.row(i) - g.centroid.row(g.label[static_cast<std::size_t>(i)])).squaredNorm();
  }
  if (!(within > 0.0)) throw std::domain_error("calinski_harabasz: degenerate clustering (zero within-cluster dispersion)");
  return (between / (g.k - 1)) / (within / static_cast<double>(n - g.k));
}

ClusterScores cluster_scores(const Points& points, std::span<const int> labels) {
  ClusterScores s;
  s.silhouette = silhouette(points, labels);
  s.davies_bouldin = davies_bouldin(points, labels);
  s.calinski_harabasz = calinski_harabasz(points, labels);
  return s;
}

}  // namespace url_lens::metrics
