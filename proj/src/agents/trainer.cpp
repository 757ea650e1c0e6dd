#include "url_lens/agents/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "url_lens/agents/dqn.hpp"
#include "url_lens/agents/ppo.hpp"
#include "url_lens/agents/schedule.hpp"
#include "url_lens/intrinsic/running_stats.hpp"

namespace url_lens::agents {

namespace {

using modelzoo::observations_to_input;
using procenv::VecRunner;

constexpr std::size_t kRewardChunk = 256;

nn::AdamOptions adam_options(const TrainingConfig& c) {
  nn::AdamOptions o;
  o.learning_rate = c.learning_rate;
  o.epsilon = c.adam_epsilon;
  o.max_grad_norm = c.max_grad_norm;
  return o;
}

std::vector<Observation> gather(const std::vector<Observation>& src, std::span<const std::size_t> idx) {
  std::vector<Observation> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(src[i]);
  return out;
}

std::vector<std::size_t> range_indices(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out(end - begin);
  std::iota(out.begin(), out.end(), begin);
  return out;
}

class RndBonus final : public IntrinsicBonus {
 public:
  RndBonus(const intrinsic::RndConfig& config, const nn::AdamOptions& options, Rng& rng)
      : module_(config, rng), adam_(module_.predictor_parameters(), options) {}

  std::vector<double> rewards(const RolloutBuffer& r) override {
    std::vector<double> out;
    out.reserve(r.size());
    for (std::size_t s = 0; s < r.size(); s += kRewardChunk) {
      const auto idx = range_indices(s, std::min(r.size(), s + kRewardChunk));
      const auto chunk = module_.rewards(observations_to_input<float>(gather(r.obs, idx)));
      out.insert(out.end(), chunk.begin(), chunk.end());
    }
    return out;
  }

  double update(const RolloutBuffer& r, int minibatch, Rng& rng) override {
    std::vector<std::size_t> order = range_indices(0, r.size());
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    int count = 0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(minibatch)) {
      const std::span idx(order.data() + s, std::min(order.size() - s, static_cast<std::size_t>(minibatch)));
      total += intrinsic::rnd_update(module_, adam_, observations_to_input<float>(gather(r.obs, idx)));
      ++count;
    }
    return count ? total / count : 0.0;
  }

 private:
  intrinsic::RndModule<float> module_;
  nn::Adam<float> adam_;
};

class IcmBonus final : public IntrinsicBonus {
 public:
  IcmBonus(const intrinsic::IcmConfig& config, const nn::AdamOptions& options, Rng& rng)
      : module_(config, rng), adam_(module_.parameters(), options) {}

  std::vector<double> rewards(const RolloutBuffer& r) override {
    std::vector<double> out;
    out.reserve(r.size());
    for (std::size_t s = 0; s < r.size(); s += kRewardChunk) {
      const std::size_t e = std::min(r.size(), s + kRewardChunk);
      const auto idx = range_indices(s, e);
      const auto chunk = module_.rewards(observations_to_input<float>(gather(r.obs, idx)),
                                         std::span(r.actions.data() + s, e - s),
                                         observations_to_input<float>(gather(r.next_obs, idx)));
      out.insert(out.end(), chunk.begin(), chunk.end());
    }
    return out;
  }

  double update(const RolloutBuffer& r, int minibatch, Rng& rng) override {
    std::vector<std::size_t> order = range_indices(0, r.size());
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    int count = 0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(minibatch)) {
      const std::span idx(order.data() + s, std::min(order.size() - s, static_cast<std::size_t>(minibatch)));
      std::vector<int> actions;
      for (std::size_t i : idx) actions.push_back(r.actions[i]);
      total += intrinsic::icm_update(module_, adam_, observations_to_input<float>(gather(r.obs, idx)), actions,
                                     observations_to_input<float>(gather(r.next_obs, idx)))
                   .total;
      ++count;
    }
    return count ? total / count : 0.0;
  }

 private:
  intrinsic::IcmModule<float> module_;
  nn::Adam<float> adam_;
};

struct EpisodeTally {
  long count = 0;
  double returns = 0.0;
  long successes = 0;

  void add(const procenv::EpisodeRecord& e) {
    ++count;
    returns += e.extrinsic_return;
    successes += e.reached_coin ? 1 : 0;
  }
  void write(TrainLogRow& row) const {
    row.episodes = count;
    row.mean_episode_return = count ? returns / static_cast<double>(count) : 0.0;
    row.success_rate = count ? static_cast<double>(successes) / static_cast<double>(count) : 0.0;
  }
};

class CheckpointCursor {
 public:
  CheckpointCursor(long total, const CheckpointCallback& cb) : schedule_(checkpoint_schedule(total)), cb_(cb) {}

  void reached(long step, modelzoo::AttributableNet<float>& net) {
    while (next_ < schedule_.size() && schedule_[next_] <= step) {
      if (cb_) cb_(schedule_[next_], net);
      ++next_;
    }
  }

 private:
  std::vector<long> schedule_;
  const CheckpointCallback& cb_;
  std::size_t next_ = 0;
};

RolloutBuffer collect_rollout(VecRunner& runner, modelzoo::ActorCritic<float>& net, int length, Rng& rng,
                              Reservoir<Observation>& frames, std::vector<procenv::EpisodeRecord>& episodes,
                              EpisodeTally& tally) {
  const int envs = runner.n_envs();
  RolloutBuffer b;
  b.reserve(length, envs);
  std::vector<int> actions(static_cast<std::size_t>(envs));
  std::vector<double> probs;
  for (int t = 0; t < length; ++t) {
    const auto& obs = runner.observations();
    const auto out = net.forward_policy(observations_to_input<float>(obs));
    const Matrix<float> logp = modelzoo::log_softmax_rows<float>(out.logits);
    probs.resize(static_cast<std::size_t>(logp.cols()));
    for (int e = 0; e < envs; ++e) {
      for (nn::Index j = 0; j < logp.cols(); ++j) probs[static_cast<std::size_t>(j)] = std::exp(logp(e, j));
      const int a = static_cast<int>(rng.categorical(probs));
      actions[static_cast<std::size_t>(e)] = a;
      b.obs.push_back(obs[static_cast<std::size_t>(e)]);
      frames.offer(obs[static_cast<std::size_t>(e)]);
      b.actions.push_back(a);
      b.log_probs.push_back(logp(e, a));
      b.values.push_back(out.values(e, 0));
    }
    auto step = runner.step(actions);
    for (int e = 0; e < envs; ++e) {
      const auto se = static_cast<std::size_t>(e);
      b.next_obs.push_back(std::move(step.next_observations[se]));
      b.extrinsic.push_back(step.rewards[se]);
      b.dones.push_back(step.dones[se]);
    }
    for (const auto& ep : step.finished) {
      tally.add(ep);
      episodes.push_back(ep);
    }
  }
  const auto last = net.forward_policy(observations_to_input<float>(runner.observations()));
  for (int e = 0; e < envs; ++e) b.last_values.push_back(last.values(e, 0));
  return b;
}

procenv::RunnerConfig runner_config(const AgentSetup& setup) {
  auto rc = setup.runner;
  rc.n_envs = setup.training.n_envs;
  return rc;
}

TrainResult train_on_policy(const AgentSetup& setup, const CheckpointCallback& on_checkpoint, Rng& master) {
  const auto& cfg = setup.training;
  Rng init_rng = master.fork(1);
  std::unique_ptr<modelzoo::ActorCritic<float>> net;
  if (uses_transformer(setup.kind)) {
    net = std::make_unique<modelzoo::TransformerPolicy<float>>(setup.net, init_rng);
  } else {
    net = std::make_unique<modelzoo::ActorCritic<float>>(setup.net, init_rng);
  }
  nn::Adam<float> adam(net->parameters(), adam_options(cfg));
  Rng bonus_rng = master.fork(2);
  auto bonus = make_intrinsic(setup, bonus_rng);
  Rng act_rng = master.fork(3);
  Rng update_rng = master.fork(4);
  Reservoir<Observation> frames(setup.frame_samples, mix_seed(setup.seed, 0xf5a3));
  intrinsic::RunningMeanStd reward_stats;

  VecRunner runner(runner_config(setup));
  if (setup.dump_frames_dir) runner.dump_frames_to(*setup.dump_frames_dir);

  TrainResult result;
  CheckpointCursor cursor(cfg.total_steps, on_checkpoint);
  cursor.reached(0, *net);
  const int length = cfg.rollout_for(setup.kind);
  long global = 0;
  while (global < cfg.total_steps) {
    EpisodeTally tally;
    RolloutBuffer rollout = collect_rollout(runner, *net, length, act_rng, frames, result.episodes, tally);
    global += static_cast<long>(length) * cfg.n_envs;

    TrainLogRow row;
    row.step = global;
    rollout.rewards = rollout.extrinsic;
    if (bonus) {
      rollout.intrinsic = bonus->rewards(rollout);
      // Only the distillation error is rescaled; ICM's beta / 2 already sets its scale.
      double scale = cfg.eta;
      if (setup.kind != AgentKind::icm) {
        reward_stats.update(rollout.intrinsic);
        scale /= reward_stats.std() + 1e-8;
      }
      for (std::size_t i = 0; i < rollout.size(); ++i) rollout.rewards[i] += scale * rollout.intrinsic[i];
      row.mean_intrinsic = std::accumulate(rollout.intrinsic.begin(), rollout.intrinsic.end(), 0.0) /
                           static_cast<double>(rollout.size());
    }
    const double n = static_cast<double>(rollout.size());
    row.mean_extrinsic = std::accumulate(rollout.extrinsic.begin(), rollout.extrinsic.end(), 0.0) / n;
    row.mean_total = std::accumulate(rollout.rewards.begin(), rollout.rewards.end(), 0.0) / n;
    compute_gae(rollout, cfg.gamma, cfg.gae_lambda);
    const auto stats = ppo_update(*net, adam, rollout, cfg, update_rng);
    if (bonus) {
      double loss = 0.0;
      for (int k = 0; k < cfg.intrinsic_epochs; ++k) loss = bonus->update(rollout, cfg.minibatch_size, update_rng);
      row.intrinsic_loss = loss;
    }
    row.policy_loss = stats.policy;
    row.value_loss = stats.value;
    row.entropy = stats.entropy;
    tally.write(row);
    result.log.push_back(row);
    cursor.reached(global, *net);
  }
  result.steps = global;
  result.frames = frames.take();
  return result;
}

TrainResult train_dqn(const AgentSetup& setup, const CheckpointCallback& on_checkpoint, Rng& master) {
  const auto& cfg = setup.training;
  Rng init_rng = master.fork(1);
  modelzoo::QNetwork<float> online(setup.net, init_rng);
  modelzoo::QNetwork<float> target = online;
  nn::Adam<float> adam(online.parameters(), adam_options(cfg));
  Rng act_rng = master.fork(3);
  Rng sample_rng = master.fork(4);
  Reservoir<Observation> frames(setup.frame_samples, mix_seed(setup.seed, 0xf5a3));
  ReplayBuffer replay(static_cast<std::size_t>(std::min(cfg.buffer_size, cfg.total_steps)));

  VecRunner runner(runner_config(setup));
  if (setup.dump_frames_dir) runner.dump_frames_to(*setup.dump_frames_dir);
  const int envs = runner.n_envs();
  const long log_interval = static_cast<long>(cfg.rollout_len) * envs;

  TrainResult result;
  CheckpointCursor cursor(cfg.total_steps, on_checkpoint);
  cursor.reached(0, online);
  long global = 0;
  long updates_done = 0;
  long syncs_done = 0;
  long next_log = log_interval;
  EpisodeTally tally;
  double td_sum = 0.0;
  long td_count = 0;
  double ext_sum = 0.0;
  long ext_count = 0;
  std::vector<int> actions(static_cast<std::size_t>(envs));
  while (global < cfg.total_steps) {
    const double eps = epsilon_at(global, cfg.total_steps, cfg.eps_start, cfg.eps_end, cfg.eps_fraction);
    const auto& obs = runner.observations();
    const Matrix<float> q = online.forward_q(observations_to_input<float>(obs));
    for (int e = 0; e < envs; ++e) {
      int a = 0;
      if (act_rng.bernoulli(eps)) {
        a = static_cast<int>(act_rng.index(static_cast<std::size_t>(q.cols())));
      } else {
        q.row(e).maxCoeff(&a);
      }
      actions[static_cast<std::size_t>(e)] = a;
      frames.offer(obs[static_cast<std::size_t>(e)]);
    }
    const std::vector<Observation> before = obs;
    auto step = runner.step(actions);
    for (int e = 0; e < envs; ++e) {
      const auto se = static_cast<std::size_t>(e);
      replay.push({before[se], actions[se], step.rewards[se], std::move(step.next_observations[se]), step.dones[se] != 0});
      ext_sum += step.rewards[se];
      ++ext_count;
    }
    for (const auto& ep : step.finished) {
      tally.add(ep);
      result.episodes.push_back(ep);
    }
    global += envs;

    if (global >= cfg.learning_starts) {
      const long due = global / cfg.train_frequency;
      for (; updates_done < due; ++updates_done) {
        const auto idx = replay.sample_indices(static_cast<std::size_t>(cfg.batch_size), sample_rng);
        td_sum += dqn_update(online, target, adam, gather_batch<float>(replay, idx), cfg.gamma, cfg.huber_delta);
        ++td_count;
      }
    } else {
      updates_done = global / cfg.train_frequency;
    }
    const long syncs_due = global / cfg.target_update;
    if (syncs_due > syncs_done) {
      nn::copy_values(online.parameters(), target.parameters());
      syncs_done = syncs_due;
    }

    if (global >= next_log || global >= cfg.total_steps) {
      TrainLogRow row;
      row.step = global;
      row.epsilon = eps;
      row.td_loss = td_count ? td_sum / static_cast<double>(td_count) : 0.0;
      row.mean_extrinsic = ext_count ? ext_sum / static_cast<double>(ext_count) : 0.0;
      row.mean_total = row.mean_extrinsic;
      tally.write(row);
      result.log.push_back(row);
      tally = {};
      td_sum = 0.0;
      td_count = 0;
      ext_sum = 0.0;
      ext_count = 0;
      while (next_log <= global) next_log += log_interval;
    }
    cursor.reached(global, online);
  }
  result.steps = global;
  result.frames = frames.take();
  return result;
}

}  // namespace

template <typename T>
std::unique_ptr<modelzoo::AttributableNet<T>> make_network(AgentKind kind, const modelzoo::NetConfig& config, Rng& rng) {
  if (is_value_based(kind)) return std::make_unique<modelzoo::QNetwork<T>>(config, rng);
  if (uses_transformer(kind)) return std::make_unique<modelzoo::TransformerPolicy<T>>(config, rng);
  return std::make_unique<modelzoo::ActorCritic<T>>(config, rng);
}

template std::unique_ptr<modelzoo::AttributableNet<float>> make_network<float>(AgentKind, const modelzoo::NetConfig&,
                                                                               Rng&);
template std::unique_ptr<modelzoo::AttributableNet<double>> make_network<double>(AgentKind, const modelzoo::NetConfig&,
                                                                                 Rng&);

std::unique_ptr<IntrinsicBonus> make_intrinsic(const AgentSetup& setup, Rng& rng) {
  const auto options = adam_options(setup.training);
  if (uses_icm(setup.kind)) return std::make_unique<IcmBonus>(setup.icm, options, rng);
  if (uses_rnd(setup.kind)) return std::make_unique<RndBonus>(setup.rnd, options, rng);
  return nullptr;
}

TrainResult train_agent(const AgentSetup& setup, const CheckpointCallback& on_checkpoint) {
  setup.training.validate();
  Rng master(mix_seed(setup.seed, 0xa6e7 + static_cast<std::uint64_t>(setup.kind)));
  if (is_value_based(setup.kind)) return train_dqn(setup, on_checkpoint, master);
  return train_on_policy(setup, on_checkpoint, master);
}

}  // namespace url_lens::agents
