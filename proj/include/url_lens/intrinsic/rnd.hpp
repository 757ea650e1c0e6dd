#pragma once

#include <cstdint>
#include <vector>

#include "url_lens/modelzoo/encoder.hpp"
#include "url_lens/nn/adam.hpp"

namespace url_lens::intrinsic {

using nn::Matrix;

struct RndConfig {
  modelzoo::EncoderConfig encoder;
  int embedding = 256;
};

/// Random network distillation: a frozen random target f_tgt and a trained
/// predictor f_pred of identical topology (conv stack -> linear embedding).
template <typename T>
class RndModule {
 public:
  RndModule(const RndConfig& config, Rng& rng);

  /// ||f_pred(s) - f_tgt(s)||^2 per observation.
  std::vector<double> rewards(const Matrix<T>& obs);

  /// Mean reward over the batch; accumulates predictor gradients only.
  double loss_and_backward(const Matrix<T>& obs);

  std::vector<nn::Parameter<T>*> predictor_parameters() { return predictor_.parameters(); }
  std::uint64_t target_hash();
  /// Test hook: makes the predictor an exact copy of the target.
  void copy_target_into_predictor();

  Matrix<T> target_embedding(const Matrix<T>& obs) { return target_.forward(obs); }
  Matrix<T> predictor_embedding(const Matrix<T>& obs) { return predictor_.forward(obs); }

 private:
  RndConfig config_;
  nn::Sequential<T> target_;
  nn::Sequential<T> predictor_;
};

/// Thrown when the frozen target changes across an update.
class FrozenTargetViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One predictor step; verifies the target hash before and after.
template <typename T>
double rnd_update(RndModule<T>& module, nn::Adam<T>& optimizer, const Matrix<T>& obs);

}  // namespace url_lens::intrinsic
