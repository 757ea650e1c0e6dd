#include "url_lens/metrics/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace url_lens::metrics {

namespace {

double mass(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::max(0.0, x);
  return s;
}

}  // namespace

double attention_diversity(std::span<const double> values) {
  const double total = mass(values);
  if (!(total > 0.0) || values.size() < 2) return 0.0;
  double h = 0.0;
  for (double x : values) {
    const double p = std::max(0.0, x) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(values.size())), 0.0, 1.0);
}

double attention_diversity(const SaliencyMap& map) { return attention_diversity(map.values); }

double attention_change_rate(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("attention_change_rate: size mismatch");
  const double mp = mass(p);
  const double mq = mass(q);
  if (!(mp > 0.0) || !(mq > 0.0)) return (mp > 0.0) == (mq > 0.0) ? 0.0 : 1.0;
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(std::max(0.0, p[i]) / mp - std::max(0.0, q[i]) / mq);
  return std::clamp(0.5 * tv, 0.0, 1.0);
}

double attention_change_rate(const SaliencyMap& a, const SaliencyMap& b) {
  if (a.frame_id != b.frame_id || a.method != b.method) {
    throw std::invalid_argument("attention_change_rate: maps refer to different frames or methods");
  }
  if (a.height != b.height || a.width != b.width) throw std::invalid_argument("attention_change_rate: size mismatch");
  return attention_change_rate(a.values, b.values);
}

double attention_spread(std::span<const double> values, int height, int width) {
  if (values.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("attention_spread: size mismatch");
  }
  const double total = mass(values);
  const double half_diag = 0.5 * std::hypot(height - 1.0, width - 1.0);
  if (!(total > 0.0) || half_diag == 0.0) return 0.0;
  double cy = 0.0, cx = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double w = std::max(0.0, values[static_cast<std::size_t>(y) * width + x]) / total;
      cy += w * y;
      cx += w * x;
    }
  }
  double ms = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double w = std::max(0.0, values[static_cast<std::size_t>(y) * width + x]) / total;
      ms += w * ((y - cy) * (y - cy) + (x - cx) * (x - cx));
    }
  }
  return std::clamp(std::sqrt(ms) / half_diag, 0.0, 1.0);
}

double attention_spread(const SaliencyMap& map) { return attention_spread(map.values, map.height, map.width); }

double gradcam_coverage(std::span<const double> values, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("gradcam_coverage: tau must lie in (0, 1]");
  if (values.empty()) return 0.0;
  const auto hits = std::count_if(values.begin(), values.end(), [tau](double v) { return v >= tau; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(values.size());
}

double gradcam_coverage(const SaliencyMap& map, double tau) { return gradcam_coverage(map.values, tau); }

}  // namespace url_lens::metrics
