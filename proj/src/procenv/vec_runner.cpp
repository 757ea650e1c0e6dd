#include "url_lens/procenv/vec_runner.hpp"

#include <stdexcept>
#include <string>

namespace url_lens::procenv {

std::vector<std::uint64_t> level_pool_seeds(std::uint64_t run_seed, int pool_size) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < pool_size; ++i) seeds.push_back(run_seed * 1000 + static_cast<std::uint64_t>(i));
  return seeds;
}

std::vector<std::uint64_t> held_out_seeds(std::uint64_t run_seed, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(run_seed * 1000 + 500 + static_cast<std::uint64_t>(i));
  return seeds;
}

VecRunner::VecRunner(RunnerConfig config) : config_(std::move(config)) {
  if (config_.n_envs < 1) throw std::invalid_argument("VecRunner: n_envs must be positive");
  if (config_.level_pool_size < 1 || config_.level_pool_size > 500) {
    throw std::invalid_argument("VecRunner: level_pool_size must be in [1, 500]");
  }
  for (std::uint64_t s : level_pool_seeds(config_.seed, config_.level_pool_size)) {
    pool_.push_back(generate_level(s, config_.env.difficulty));
  }
  const auto n = static_cast<std::size_t>(config_.n_envs);
  states_.resize(n);
  current_.resize(n);
  returns_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    rngs_.emplace_back(mix_seed(config_.seed, 0xe4e0 + i));
    reset_env(i);
  }
}

void VecRunner::reset_env(std::size_t i) {
  const LevelSpec& level = pool_[rngs_[i].index(pool_.size())];
  states_[i] = reset(level);
  current_[i] = render(states_[i]);
  returns_[i] = 0.0;
  maybe_dump(i, current_[i]);
}

VecStep VecRunner::step(std::span<const int> actions) {
  if (actions.size() != states_.size()) throw std::invalid_argument("VecRunner::step: one action per env required");
  VecStep out;
  const std::size_t n = states_.size();
  out.next_observations.resize(n);
  out.rewards.resize(n);
  out.dones.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = actions[i];
    if (a < 0 || a >= kNumActions) throw std::invalid_argument("VecRunner::step: action out of range");
    StepResult r = procenv::step(states_[i], static_cast<Action>(a), config_.env);
    returns_[i] += r.reward;
    out.rewards[i] = r.reward;
    out.dones[i] = r.done ? 1 : 0;
    out.next_observations[i] = r.observation;
    if (r.done) {
      out.finished.push_back({static_cast<int>(i), r.state.level.seed, returns_[i], r.state.t,
                              r.state.agent_x == r.state.level.coin_column && r.state.agent_y >= 0});
      reset_env(i);
    } else {
      states_[i] = std::move(r.state);
      current_[i] = r.observation;
      maybe_dump(i, current_[i]);
    }
  }
  ++frame_counter_;
  return out;
}

void VecRunner::dump_frames_to(std::filesystem::path dir) {
  std::filesystem::create_directories(dir);
  dump_dir_ = std::move(dir);
}

void VecRunner::maybe_dump(std::size_t env, const Observation& obs) {
  if (!dump_dir_) return;
  write_png(*dump_dir_ / ("frame_" + std::to_string(env) + "_" + std::to_string(frame_counter_) + ".png"),
            to_image(obs));
}

}  // namespace url_lens::procenv
