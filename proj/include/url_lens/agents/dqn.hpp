#pragma once

#include <span>
#include <vector>

#include "url_lens/agents/buffers.hpp"
#include "url_lens/modelzoo/networks.hpp"
#include "url_lens/nn/adam.hpp"

namespace url_lens::agents {

using nn::Matrix;

template <typename T>
struct DqnBatch {
  Matrix<T> obs;
  Matrix<T> next_obs;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;

  std::size_t size() const { return actions.size(); }
};

template <typename T>
DqnBatch<T> gather_batch(const ReplayBuffer& buffer, std::span<const std::size_t> indices);

/// r + gamma * (1 - done) * max_a Q_target(s', a).
template <typename T>
std::vector<double> td_targets(const Matrix<T>& next_q, std::span<const double> rewards,
                               std::span<const std::uint8_t> dones, double gamma);

template <typename T>
struct TdLoss {
  double loss = 0.0;
  Matrix<T> grad_q;
};

/// Mean Huber loss of Q(s, a) against fixed targets and its gradient w.r.t. Q.
template <typename T>
TdLoss<T> huber_td_loss(const Matrix<T>& q, std::span<const int> actions, std::span<const double> targets,
                        double delta);

/// Loss of the online network against targets from `target`; accumulates online gradients.
template <typename T>
double dqn_loss_and_backward(modelzoo::QNetwork<T>& online, modelzoo::QNetwork<T>& target, const DqnBatch<T>& batch,
                             double gamma, double huber_delta);

/// One optimizer step. Throws std::invalid_argument on an empty batch.
template <typename T>
double dqn_update(modelzoo::QNetwork<T>& online, modelzoo::QNetwork<T>& target, nn::Adam<T>& optimizer,
                  const DqnBatch<T>& batch, double gamma, double huber_delta);

}  // namespace url_lens::agents
