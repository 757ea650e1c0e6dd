#pragma once

#include <vector>

#include "url_lens/nn/layers.hpp"

namespace url_lens::nn {

struct AdamOptions {
  double learning_rate = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double max_grad_norm = 0.0;  // 0 disables clipping
};

/// Adaptive-moment optimizer over a fixed parameter list. The parameters must
/// outlive the optimizer.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamOptions options);

  void zero_grad();
  /// Applies clipping (if enabled) and one update; returns the pre-clip gradient norm.
  double step();

  const AdamOptions& options() const { return options_; }
  long steps_taken() const { return t_; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamOptions options_;
  std::vector<Matrix<T>> m_, v_;
  long t_ = 0;
};

template <typename T>
double global_grad_norm(const std::vector<Parameter<T>*>& params);

}  // namespace url_lens::nn
