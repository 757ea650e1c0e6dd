#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "url_lens/agents/buffers.hpp"
#include "url_lens/agents/config.hpp"
#include "url_lens/intrinsic/icm.hpp"
#include "url_lens/intrinsic/rnd.hpp"
#include "url_lens/modelzoo/networks.hpp"
#include "url_lens/procenv/vec_runner.hpp"

namespace url_lens::agents {

struct AgentSetup {
  AgentKind kind = AgentKind::ppo;
  TrainingConfig training;
  modelzoo::NetConfig net;
  intrinsic::IcmConfig icm;
  intrinsic::RndConfig rnd;
  procenv::RunnerConfig runner;  // n_envs is taken from `training`
  std::uint64_t seed = 0;
  std::size_t frame_samples = 5000;
  std::optional<std::filesystem::path> dump_frames_dir;
};

struct TrainLogRow {
  long step = 0;
  long episodes = 0;
  double mean_episode_return = 0.0;  // extrinsic, over episodes finished in this interval
  double success_rate = 0.0;
  double mean_extrinsic = 0.0;  // per transition
  double mean_intrinsic = 0.0;  // per transition, raw
  double mean_total = 0.0;      // per transition, the reward actually optimized
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double td_loss = 0.0;
  double intrinsic_loss = 0.0;
  double epsilon = 0.0;
};

struct TrainResult {
  long steps = 0;
  std::vector<TrainLogRow> log;
  std::vector<procenv::EpisodeRecord> episodes;
  /// Uniform reservoir sample of the observations the agent acted on.
  std::vector<procenv::Observation> frames;
};

/// Called once per scheduled checkpoint with the scheduled step number.
using CheckpointCallback = std::function<void(long step, modelzoo::AttributableNet<float>& net)>;

/// Fresh network of the architecture an agent kind uses.
template <typename T>
std::unique_ptr<modelzoo::AttributableNet<T>> make_network(AgentKind kind, const modelzoo::NetConfig& config, Rng& rng);

/// Curiosity signal used by the on-policy agents.
class IntrinsicBonus {
 public:
  virtual ~IntrinsicBonus() = default;
  virtual std::vector<double> rewards(const RolloutBuffer& rollout) = 0;
  /// One pass of minibatch updates over the rollout; returns the mean loss.
  virtual double update(const RolloutBuffer& rollout, int minibatch, Rng& rng) = 0;
};

std::unique_ptr<IntrinsicBonus> make_intrinsic(const AgentSetup& setup, Rng& rng);

TrainResult train_agent(const AgentSetup& setup, const CheckpointCallback& on_checkpoint);

/// Reservoir sampler (algorithm R) with its own stream.
template <typename Item>
class Reservoir {
 public:
  Reservoir(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) { items_.reserve(capacity); }

  void offer(const Item& item) {
    if (items_.size() < capacity_) {
      items_.push_back(item);
    } else if (capacity_ > 0) {
      const std::size_t j = rng_.index(static_cast<std::size_t>(seen_ + 1));
      if (j < capacity_) items_[j] = item;
    }
    ++seen_;
  }

  std::vector<Item> take() { return std::move(items_); }
  std::uint64_t seen() const { return seen_; }

 private:
  std::size_t capacity_;
  Rng rng_;
  std::vector<Item> items_;
  std::uint64_t seen_ = 0;
};

}  // namespace url_lens::agents
