#pragma once

#include <cmath>
#include <span>

namespace url_lens::intrinsic {

/// Streaming mean/variance with batch merges (Chan et al. parallel update).
class RunningMeanStd {
 public:
  void update(std::span<const double> batch) {
    if (batch.empty()) return;
    double bm = 0.0;
    for (double v : batch) bm += v;
    bm /= static_cast<double>(batch.size());
    double bv = 0.0;
    for (double v : batch) bv += (v - bm) * (v - bm);
    bv /= static_cast<double>(batch.size());
    const double bc = static_cast<double>(batch.size());
    const double total = count_ + bc;
    const double delta = bm - mean_;
    mean_ += delta * bc / total;
    const double m2 = var_ * count_ + bv * bc + delta * delta * count_ * bc / total;
    var_ = m2 / total;
    count_ = total;
  }

  double mean() const { return mean_; }
  double variance() const { return var_; }
  double std() const { return std::sqrt(var_); }
  double count() const { return count_; }

 private:
  double mean_ = 0.0;
  double var_ = 1.0;
  double count_ = 1e-4;
};

}  // namespace url_lens::intrinsic
