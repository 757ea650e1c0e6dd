#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "url_lens/common/rng.hpp"
#include "url_lens/procenv/env.hpp"

namespace url_lens::agents {

using procenv::Observation;

struct Transition {
  Observation obs;
  int action = 0;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
};

/// Fixed-capacity ring of transitions. Each slot remembers the serial number
/// of the insertion that filled it.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return slots_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_pushed() const { return pushed_; }

  /// `count` indices drawn uniformly with replacement. Throws on an empty buffer.
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;
  const Transition& at(std::size_t i) const { return slots_[i]; }
  std::uint64_t serial(std::size_t i) const { return serials_[i]; }

 private:
  std::size_t capacity_;
  std::vector<Transition> slots_;
  std::vector<std::uint64_t> serials_;
  std::size_t head_ = 0;
  std::uint64_t pushed_ = 0;
};

/// On-policy storage, index t * n_envs + env.
struct RolloutBuffer {
  int length = 0;
  int n_envs = 0;
  std::vector<Observation> obs;
  std::vector<Observation> next_obs;
  std::vector<int> actions;
  std::vector<float> log_probs;
  std::vector<float> values;
  std::vector<double> extrinsic;
  std::vector<double> intrinsic;
  std::vector<double> rewards;  // what the return is computed from
  std::vector<std::uint8_t> dones;
  std::vector<float> last_values;  // bootstrap V(s_T) per env
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
  void reserve(int len, int envs);
};

/// Generalized advantage estimation over `rewards`. A done flag cuts the
/// bootstrap at that transition.
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

/// In-place (a - mean) / (std + 1e-8) with the population std. No-op for fewer than two entries.
void normalize_advantages(std::span<double> advantages);

}  // namespace url_lens::agents
