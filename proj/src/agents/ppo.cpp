#include "url_lens/agents/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace url_lens::agents {

template <typename T>
PpoLoss<T> ppo_loss(const modelzoo::PolicyOutput<T>& out, std::span<const int> actions,
                    std::span<const double> old_log_probs, std::span<const double> advantages,
                    std::span<const double> returns, const PpoCoefficients& coef) {
  const auto b = static_cast<nn::Index>(actions.size());
  if (b == 0) throw std::invalid_argument("ppo_loss: empty batch");
  const nn::Index na = out.logits.cols();
  const Matrix<T> logp = modelzoo::log_softmax_rows<T>(out.logits);
  const double inv_b = 1.0 / static_cast<double>(b);

  PpoLoss<T> loss;
  loss.grad_logits = Matrix<T>::Zero(b, na);
  loss.grad_values = Matrix<T>::Zero(b, 1);
  for (nn::Index i = 0; i < b; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const int a = actions[si];
    if (a < 0 || a >= na) throw std::out_of_range("ppo_loss: action index out of range");
    const double adv = advantages[si];
    const double ratio = std::exp(static_cast<double>(logp(i, a)) - old_log_probs[si]);
    const double clipped = std::clamp(ratio, 1.0 - coef.clip_eps, 1.0 + coef.clip_eps);
    const double s1 = ratio * adv;
    const double s2 = clipped * adv;
    loss.policy -= std::min(s1, s2) * inv_b;
    if (clipped != ratio) loss.clip_fraction += inv_b;
    // When the clipped branch is strictly smaller the ratio sits outside the
    // band and that branch is constant.
    const double g_logp = s1 <= s2 ? -adv * ratio * inv_b : 0.0;

    double h = 0.0;
    for (nn::Index j = 0; j < na; ++j) h -= std::exp(static_cast<double>(logp(i, j))) * static_cast<double>(logp(i, j));
    loss.entropy += h * inv_b;

    for (nn::Index j = 0; j < na; ++j) {
      const double pj = std::exp(static_cast<double>(logp(i, j)));
      const double d_logp = g_logp * ((j == a ? 1.0 : 0.0) - pj);
      const double d_entropy = -pj * (static_cast<double>(logp(i, j)) + h);
      loss.grad_logits(i, j) = static_cast<T>(d_logp - coef.entropy_coef * d_entropy * inv_b);
    }

    const double err = static_cast<double>(out.values(i, 0)) - returns[si];
    loss.value += err * err * inv_b;
    loss.grad_values(i, 0) = static_cast<T>(coef.value_coef * 2.0 * err * inv_b);
  }
  loss.total = loss.policy + coef.value_coef * loss.value - coef.entropy_coef * loss.entropy;
  return loss;
}

template <typename T>
PpoLoss<T> ppo_loss_and_backward(modelzoo::ActorCritic<T>& net, const PpoBatch<T>& batch, const PpoCoefficients& coef) {
  const auto out = net.forward_policy(batch.obs);
  auto loss = ppo_loss<T>(out, batch.actions, batch.old_log_probs, batch.advantages, batch.returns, coef);
  net.backward_policy(loss.grad_logits, loss.grad_values);
  return loss;
}

PpoStats ppo_update(modelzoo::ActorCritic<float>& net, nn::Adam<float>& optimizer, const RolloutBuffer& rollout,
                    const TrainingConfig& config, Rng& rng) {
  const std::size_t n = rollout.size();
  if (rollout.advantages.size() != n || rollout.returns.size() != n) {
    throw std::invalid_argument("ppo_update: advantages not computed");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(rollout.advantages[i]) || !std::isfinite(rollout.returns[i])) {
      throw std::runtime_error("ppo_update: non-finite advantage or return at rollout index " + std::to_string(i) +
                               " (advantage=" + std::to_string(rollout.advantages[i]) +
                               ", reward=" + std::to_string(rollout.rewards[i]) + ")");
    }
  }
  const PpoCoefficients coef{config.clip_eps, config.value_coef, config.entropy_coef};
  const auto mb = static_cast<std::size_t>(config.minibatch_size);
  std::vector<std::size_t> order(n);
  PpoStats stats;
  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      PpoBatch<float> batch;
      std::vector<Observation> obs;
      obs.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        obs.push_back(rollout.obs[i]);
        batch.actions.push_back(rollout.actions[i]);
        batch.old_log_probs.push_back(rollout.log_probs[i]);
        batch.advantages.push_back(rollout.advantages[i]);
        batch.returns.push_back(rollout.returns[i]);
      }
      batch.obs = modelzoo::observations_to_input<float>(obs);
      normalize_advantages(batch.advantages);
      optimizer.zero_grad();
      const auto loss = ppo_loss_and_backward(net, batch, coef);
      optimizer.step();
      stats.policy += loss.policy;
      stats.value += loss.value;
      stats.entropy += loss.entropy;
      stats.clip_fraction += loss.clip_fraction;
      ++stats.minibatches;
    }
  }
  if (stats.minibatches > 0) {
    const double k = stats.minibatches;
    stats.policy /= k;
    stats.value /= k;
    stats.entropy /= k;
    stats.clip_fraction /= k;
  }
  return stats;
}

#define URL_LENS_INSTANTIATE(T)                                                                                \
  template PpoLoss<T> ppo_loss<T>(const modelzoo::PolicyOutput<T>&, std::span<const int>,                      \
                                  std::span<const double>, std::span<const double>, std::span<const double>,   \
                                  const PpoCoefficients&);                                                     \
  template PpoLoss<T> ppo_loss_and_backward<T>(modelzoo::ActorCritic<T>&, const PpoBatch<T>&,                  \
                                               const PpoCoefficients&);

URL_LENS_INSTANTIATE(float)
URL_LENS_INSTANTIATE(double)
#undef URL_LENS_INSTANTIATE

}  // namespace url_lens::agents
