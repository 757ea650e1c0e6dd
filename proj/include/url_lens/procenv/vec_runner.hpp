#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "url_lens/common/rng.hpp"
#include "url_lens/procenv/env.hpp"

namespace url_lens::procenv {

struct RunnerConfig {
  int n_envs = 8;
  int level_pool_size = 10;
  std::uint64_t seed = 0;
  EnvConfig env;
};

/// Seeds of the training pool for a run seed; held-out seeds never overlap it.
std::vector<std::uint64_t> level_pool_seeds(std::uint64_t run_seed, int pool_size);
std::vector<std::uint64_t> held_out_seeds(std::uint64_t run_seed, int count);

struct EpisodeRecord {
  int env = 0;
  std::uint64_t level_seed = 0;
  double extrinsic_return = 0.0;
  int length = 0;
  bool reached_coin = false;
};

struct VecStep {
  /// Observation produced by the action; for finished episodes this is the
  /// terminal frame, not the reset frame.
  std::vector<Observation> next_observations;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<EpisodeRecord> finished;
};

/// n_envs independent environments with automatic reset onto pool levels.
class VecRunner {
 public:
  explicit VecRunner(RunnerConfig config);

  int n_envs() const { return config_.n_envs; }
  const RunnerConfig& config() const { return config_; }
  const std::vector<Observation>& observations() const { return current_; }
  const std::vector<EnvState>& states() const { return states_; }
  const std::vector<LevelSpec>& level_pool() const { return pool_; }

  VecStep step(std::span<const int> actions);

  /// Write every emitted frame as frame_<env>_<t>.png under `dir`.
  void dump_frames_to(std::filesystem::path dir);

 private:
  void reset_env(std::size_t i);
  void maybe_dump(std::size_t env, const Observation& obs);

  RunnerConfig config_;
  std::vector<LevelSpec> pool_;
  std::vector<Rng> rngs_;
  std::vector<EnvState> states_;
  std::vector<Observation> current_;
  std::vector<double> returns_;
  std::optional<std::filesystem::path> dump_dir_;
  std::uint64_t frame_counter_ = 0;
};

}  // namespace url_lens::procenv
