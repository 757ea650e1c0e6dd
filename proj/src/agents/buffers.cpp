#include "url_lens/agents/buffers.hpp"

#include <cmath>
#include <stdexcept>

namespace url_lens::agents {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(t));
    serials_.push_back(pushed_);
  } else {
    slots_[head_] = std::move(t);
    serials_[head_] = pushed_;
  }
  head_ = (head_ + 1) % capacity_;
  ++pushed_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
  if (slots_.empty()) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = rng.index(slots_.size());
  return out;
}

void RolloutBuffer::reserve(int len, int envs) {
  length = len;
  n_envs = envs;
  const auto n = static_cast<std::size_t>(len) * static_cast<std::size_t>(envs);
  obs.reserve(n);
  next_obs.reserve(n);
  actions.reserve(n);
  log_probs.reserve(n);
  values.reserve(n);
  extrinsic.reserve(n);
  dones.reserve(n);
}

void compute_gae(RolloutBuffer& b, double gamma, double lambda) {
  const std::size_t n = b.size();
  const auto envs = static_cast<std::size_t>(b.n_envs);
  if (b.rewards.size() != n || b.values.size() != n || b.dones.size() != n || b.last_values.size() != envs ||
      n != static_cast<std::size_t>(b.length) * envs) {
    throw std::invalid_argument("compute_gae: inconsistent rollout buffer");
  }
  b.advantages.assign(n, 0.0);
  b.returns.assign(n, 0.0);
  for (std::size_t e = 0; e < envs; ++e) {
    double gae = 0.0;
    for (int t = b.length - 1; t >= 0; --t) {
      const std::size_t i = static_cast<std::size_t>(t) * envs + e;
      const double nonterminal = b.dones[i] ? 0.0 : 1.0;
      const double next_value = t == b.length - 1 ? b.last_values[e] : b.values[i + envs];
      const double delta = b.rewards[i] + gamma * next_value * nonterminal - b.values[i];
      gae = delta + gamma * lambda * nonterminal * gae;
      b.advantages[i] = gae;
      b.returns[i] = gae + b.values[i];
    }
  }
}

void normalize_advantages(std::span<double> a) {
  if (a.size() < 2) return;
  double mean = 0.0;
  for (double v : a) mean += v;
  mean /= static_cast<double>(a.size());
  double var = 0.0;
  for (double v : a) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(a.size()));
  for (double& v : a) v = (v - mean) / (sd + 1e-8);
}

}  // namespace url_lens::agents
