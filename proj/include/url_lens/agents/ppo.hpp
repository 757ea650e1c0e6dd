#pragma once

#include <span>
#include <vector>

#include "url_lens/agents/buffers.hpp"
#include "url_lens/agents/config.hpp"
#include "url_lens/modelzoo/networks.hpp"
#include "url_lens/nn/adam.hpp"

namespace url_lens::agents {

using nn::Matrix;

struct PpoCoefficients {
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

template <typename T>
struct PpoLoss {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  Matrix<T> grad_logits;
  Matrix<T> grad_values;
};

/// Clipped surrogate + value_coef * mean (V - R)^2 - entropy_coef * mean entropy,
/// with gradients w.r.t. logits and values. `advantages` are used as given.
template <typename T>
PpoLoss<T> ppo_loss(const modelzoo::PolicyOutput<T>& out, std::span<const int> actions,
                    std::span<const double> old_log_probs, std::span<const double> advantages,
                    std::span<const double> returns, const PpoCoefficients& coef);

template <typename T>
struct PpoBatch {
  Matrix<T> obs;
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Forward, loss and backward on one minibatch; accumulates network gradients.
template <typename T>
PpoLoss<T> ppo_loss_and_backward(modelzoo::ActorCritic<T>& net, const PpoBatch<T>& batch, const PpoCoefficients& coef);

struct PpoStats {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

/// update_epochs passes over a shuffled rollout with per-minibatch advantage
/// normalization. Throws std::runtime_error on a non-finite advantage.
PpoStats ppo_update(modelzoo::ActorCritic<float>& net, nn::Adam<float>& optimizer, const RolloutBuffer& rollout,
                    const TrainingConfig& config, Rng& rng);

}  // namespace url_lens::agents
