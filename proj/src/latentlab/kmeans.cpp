#include "url_lens/latentlab/kmeans.hpp"

#include <limits>
#include <stdexcept>

#include "url_lens/common/rng.hpp"

namespace url_lens::latentlab {

namespace {

// Squared distances point x centroid via ||x||^2 - 2 x.c + ||c||^2.
Eigen::MatrixXd squared_distances(const Points& points, const Points& centroids) {
  const Eigen::VectorXd pn = points.rowwise().squaredNorm();
  const Eigen::RowVectorXd cn = centroids.rowwise().squaredNorm().transpose();
  Eigen::MatrixXd d = -2.0 * points * centroids.transpose();
  d.colwise() += pn;
  d.rowwise() += cn;
  return d.cwiseMax(0.0);
}

Points plus_plus_seeds(const Points& points, int k, Rng& rng) {
  const auto n = points.rows();
  Points c(k, points.cols());
  c.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (points.row(i) - c.row(0)).squaredNorm();
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (double v : d2) total += v;
    const auto pick = total > 0.0 ? rng.categorical(d2) : rng.index(static_cast<std::size_t>(n));
    c.row(j) = points.row(static_cast<Eigen::Index>(pick));
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& v = d2[static_cast<std::size_t>(i)];
      v = std::min(v, (points.row(i) - c.row(j)).squaredNorm());
    }
  }
  return c;
}

// Exact point-centroid inertia (no expansion round-off).
double exact_inertia(const Points& points, const Points& c, const std::vector<int>& labels) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    s += (points.row(i) - c.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return s;
}

std::vector<int> assign_exact(const Points& points, const Points& centroids) {
  const Eigen::MatrixXd d = squared_distances(points, centroids);
  std::vector<int> labels(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    // Re-rank the two best candidates exactly so ties and round-off cannot raise inertia.
    Eigen::Index best = 0;
    d.row(i).minCoeff(&best);
    double best_d = (points.row(i) - centroids.row(best)).squaredNorm();
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      if (j == best || d(i, j) > d(i, best) + 1e-9 * (1.0 + d(i, best))) continue;
      const double e = (points.row(i) - centroids.row(j)).squaredNorm();
      if (e < best_d || (e == best_d && j < best)) {
        best = j;
        best_d = e;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

KMeansResult lloyd(const Points& points, Points centroids, int max_iterations) {
  const int k = static_cast<int>(centroids.rows());
  KMeansResult r;
  r.labels = assign_exact(points, centroids);
  r.inertia = exact_inertia(points, centroids, r.labels);
  r.inertia_trace.push_back(r.inertia);
  for (int it = 0; it < max_iterations; ++it) {
    Points sums = Points::Zero(k, points.cols());
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const int l = r.labels[static_cast<std::size_t>(i)];
      sums.row(l) += points.row(i);
      ++counts[static_cast<std::size_t>(l)];
    }
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        centroids.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
      } else {
        // Empty cluster: move it onto the point farthest from its centroid.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
          const double d = (points.row(i) - centroids.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.row(j) = points.row(far);
      }
    }
    auto labels = assign_exact(points, centroids);
    const double inertia = exact_inertia(points, centroids, labels);
    const bool stable = labels == r.labels;
    r.labels = std::move(labels);
    r.inertia = inertia;
    r.inertia_trace.push_back(inertia);
    if (stable) break;
  }
  r.centroids = std::move(centroids);
  return r;
}

}  // namespace

std::vector<int> assign_nearest(const Points& points, const Points& centroids) {
  if (points.cols() != centroids.cols()) throw std::invalid_argument("assign_nearest: dimension mismatch");
  return assign_exact(points, centroids);
}

KMeansResult kmeans(const Points& points, const KMeansOptions& options) {
  if (options.k < 1) throw std::invalid_argument("kmeans: k must be positive");
  if (points.rows() < options.k) throw std::invalid_argument("kmeans: fewer points than clusters");
  Rng rng(mix_seed(options.seed, 0x4b3));
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    auto r = lloyd(points, plus_plus_seeds(points, options.k, rng), options.max_iterations);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

}  // namespace url_lens::latentlab
