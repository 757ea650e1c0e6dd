#pragma once

#include <span>
#include <vector>

#include "url_lens/modelzoo/encoder.hpp"
#include "url_lens/nn/adam.hpp"

namespace url_lens::intrinsic {

using nn::Matrix;

struct IcmConfig {
  modelzoo::EncoderConfig encoder;
  int embedding = 256;
  int hidden = 256;
  int num_actions = procenv::kNumActions;
  double beta = 0.015;
};

struct IcmLosses {
  double total = 0.0;
  double inverse = 0.0;
  double forward = 0.0;
};

/// Intrinsic curiosity: feature encoder phi, inverse model
/// (phi(s), phi(s')) -> action logits, forward model (phi(s), onehot(a)) -> phi_hat(s').
/// The forward loss treats phi(s') as a constant target, so phi learns from
/// the inverse loss and through the forward model's input only.
template <typename T>
class IcmModule {
 public:
  IcmModule(const IcmConfig& config, Rng& rng);

  /// r = (beta / 2) * ||phi_hat(s') - phi(s')||^2 per transition.
  std::vector<double> rewards(const Matrix<T>& obs, std::span<const int> actions, const Matrix<T>& next_obs);

  /// L = L_inv + beta * L_fwd with L_inv the mean cross-entropy and
  /// L_fwd = mean over the batch of 0.5 * ||phi_hat - phi(s')||^2. Accumulates
  /// gradients; when `fixed_target` is given it replaces phi(s').
  IcmLosses loss_and_backward(const Matrix<T>& obs, std::span<const int> actions, const Matrix<T>& next_obs,
                              const Matrix<T>* fixed_target = nullptr);

  Matrix<T> embed(const Matrix<T>& obs) { return phi_.forward(obs); }
  Matrix<T> predict_next(const Matrix<T>& phi, std::span<const int> actions);
  Matrix<T> inverse_logits(const Matrix<T>& phi, const Matrix<T>& phi_next);

  std::vector<nn::Parameter<T>*> parameters();
  const IcmConfig& config() const { return config_; }
  double beta() const { return config_.beta; }

 private:
  Matrix<T> forward_input(const Matrix<T>& phi, std::span<const int> actions) const;

  IcmConfig config_;
  nn::Sequential<T> phi_;
  nn::Sequential<T> inverse_;
  nn::Sequential<T> forward_;
};

/// One optimizer step on the ICM objective.
template <typename T>
IcmLosses icm_update(IcmModule<T>& module, nn::Adam<T>& optimizer, const Matrix<T>& obs, std::span<const int> actions,
                     const Matrix<T>& next_obs);

}  // namespace url_lens::intrinsic
