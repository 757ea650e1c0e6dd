#include "url_lens/agents/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace url_lens::agents {

template <typename T>
DqnBatch<T> gather_batch(const ReplayBuffer& buffer, std::span<const std::size_t> indices) {
  std::vector<Observation> obs, next;
  obs.reserve(indices.size());
  next.reserve(indices.size());
  DqnBatch<T> batch;
  for (std::size_t i : indices) {
    const Transition& t = buffer.at(i);
    obs.push_back(t.obs);
    next.push_back(t.next_obs);
    batch.actions.push_back(t.action);
    batch.rewards.push_back(t.reward);
    batch.dones.push_back(t.done ? 1 : 0);
  }
  batch.obs = modelzoo::observations_to_input<T>(obs);
  batch.next_obs = modelzoo::observations_to_input<T>(next);
  return batch;
}

template <typename T>
std::vector<double> td_targets(const Matrix<T>& next_q, std::span<const double> rewards,
                               std::span<const std::uint8_t> dones, double gamma) {
  std::vector<double> out(rewards.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double best = static_cast<double>(next_q.row(static_cast<nn::Index>(i)).maxCoeff());
    out[i] = rewards[i] + (dones[i] ? 0.0 : gamma * best);
  }
  return out;
}

template <typename T>
TdLoss<T> huber_td_loss(const Matrix<T>& q, std::span<const int> actions, std::span<const double> targets,
                        double delta) {
  const auto b = static_cast<nn::Index>(actions.size());
  if (b == 0) throw std::invalid_argument("huber_td_loss: empty batch");
  TdLoss<T> out;
  out.grad_q = Matrix<T>::Zero(q.rows(), q.cols());
  for (nn::Index i = 0; i < b; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= q.cols()) throw std::out_of_range("huber_td_loss: action index out of range");
    const double err = static_cast<double>(q(i, a)) - targets[static_cast<std::size_t>(i)];
    const double abs_err = std::abs(err);
    out.loss += abs_err <= delta ? 0.5 * err * err : delta * (abs_err - 0.5 * delta);
    out.grad_q(i, a) = static_cast<T>(std::clamp(err, -delta, delta) / static_cast<double>(b));
  }
  out.loss /= static_cast<double>(b);
  return out;
}

template <typename T>
double dqn_loss_and_backward(modelzoo::QNetwork<T>& online, modelzoo::QNetwork<T>& target, const DqnBatch<T>& batch,
                             double gamma, double huber_delta) {
  if (batch.size() == 0) throw std::invalid_argument("dqn update: empty batch");
  const auto targets = td_targets<T>(target.forward_q(batch.next_obs), batch.rewards, batch.dones, gamma);
  const Matrix<T> q = online.forward_q(batch.obs);
  auto loss = huber_td_loss<T>(q, batch.actions, targets, huber_delta);
  online.backward_q(loss.grad_q);
  return loss.loss;
}

template <typename T>
double dqn_update(modelzoo::QNetwork<T>& online, modelzoo::QNetwork<T>& target, nn::Adam<T>& optimizer,
                  const DqnBatch<T>& batch, double gamma, double huber_delta) {
  optimizer.zero_grad();
  const double loss = dqn_loss_and_backward(online, target, batch, gamma, huber_delta);
  optimizer.step();
  return loss;
}

#define URL_LENS_INSTANTIATE(T)                                                                                    \
  template DqnBatch<T> gather_batch<T>(const ReplayBuffer&, std::span<const std::size_t>);                         \
  template std::vector<double> td_targets<T>(const Matrix<T>&, std::span<const double>,                            \
                                             std::span<const std::uint8_t>, double);                               \
  template TdLoss<T> huber_td_loss<T>(const Matrix<T>&, std::span<const int>, std::span<const double>, double);    \
  template double dqn_loss_and_backward<T>(modelzoo::QNetwork<T>&, modelzoo::QNetwork<T>&, const DqnBatch<T>&,      \
                                           double, double);                                                        \
  template double dqn_update<T>(modelzoo::QNetwork<T>&, modelzoo::QNetwork<T>&, nn::Adam<T>&, const DqnBatch<T>&, \
                                double, double);

URL_LENS_INSTANTIATE(float)
URL_LENS_INSTANTIATE(double)
#undef URL_LENS_INSTANTIATE

}  // namespace url_lens::agents
