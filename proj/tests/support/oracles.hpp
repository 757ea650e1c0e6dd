#pragma once

// Straight-from-the-definition reference implementations used to check the
// library. Nothing here calls into url_lens except for plain data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline std::map<int, std::vector<std::size_t>> members(const std::vector<int>& labels) {
  std::map<int, std::vector<std::size_t>> m;
  for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].push_back(i);
  return m;
}

inline std::vector<double> centroid(const Rows& x, const std::vector<std::size_t>& idx) {
  std::vector<double> c(x[0].size(), 0.0);
  for (auto i : idx)
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += x[i][d];
  for (auto& v : c) v /= static_cast<double>(idx.size());
  return c;
}

// Rousseeuw 1987; singletons score 0.
inline double silhouette(const Rows& x, const std::vector<int>& labels) {
  const auto groups = members(labels);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& own = groups.at(labels[i]);
    if (own.size() == 1) continue;
    double a = 0.0;
    for (auto j : own) a += dist(x[i], x[j]);
    a /= static_cast<double>(own.size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, idx] : groups) {
      if (l == labels[i]) continue;
      double s = 0.0;
      for (auto j : idx) s += dist(x[i], x[j]);
      b = std::min(b, s / static_cast<double>(idx.size()));
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(x.size());
}

inline double davies_bouldin(const Rows& x, const std::vector<int>& labels) {
  const auto groups = members(labels);
  std::vector<std::vector<double>> c;
  std::vector<double> s;
  for (const auto& [l, idx] : groups) {
    c.push_back(centroid(x, idx));
    double sum = 0.0;
    for (auto i : idx) sum += dist(x[i], c.back());
    s.push_back(sum / static_cast<double>(idx.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (i != j) worst = std::max(worst, (s[i] + s[j]) / dist(c[i], c[j]));
    }
    total += worst;
  }
  return total / static_cast<double>(c.size());
}

// Uses the total = between + within decomposition, so B never touches the
// centroid-to-mean distances the library sums.
inline double calinski_harabasz(const Rows& x, const std::vector<int>& labels) {
  const auto groups = members(labels);
  std::vector<std::size_t> all(x.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto mean = centroid(x, all);
  double total = 0.0;
  for (const auto& row : x) total += dist(row, mean) * dist(row, mean);
  double within = 0.0;
  for (const auto& [l, idx] : groups) {
    const auto c = centroid(x, idx);
    for (auto i : idx) within += dist(x[i], c) * dist(x[i], c);
  }
  const double k = static_cast<double>(groups.size()), n = static_cast<double>(x.size());
  return ((total - within) / (k - 1.0)) / (within / (n - k));
}

/// Central differences of f with respect to every entry of `theta`, restored afterwards.
inline std::vector<double> central_difference(std::vector<double*> theta, const std::function<double()>& f,
                                              double h = 1e-6) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double keep = *theta[i];
    *theta[i] = keep + h;
    const double up = f();
    *theta[i] = keep - h;
    const double down = f();
    *theta[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale > 0.0 ? std::sqrt(d) / scale : 0.0;
}

}  // namespace oracle
