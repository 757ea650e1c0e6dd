#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace url_lens::agents {

enum class AgentKind { dqn, ppo, icm, rnd, transformer_rnd };

inline constexpr std::array<AgentKind, 5> kAllAgents = {AgentKind::dqn, AgentKind::ppo, AgentKind::icm, AgentKind::rnd,
                                                        AgentKind::transformer_rnd};

std::string_view agent_name(AgentKind kind);
/// Throws std::invalid_argument for unknown names.
AgentKind parse_agent(std::string_view name);

inline bool is_value_based(AgentKind k) { return k == AgentKind::dqn; }
inline bool uses_icm(AgentKind k) { return k == AgentKind::icm; }
inline bool uses_rnd(AgentKind k) { return k == AgentKind::rnd || k == AgentKind::transformer_rnd; }
inline bool uses_transformer(AgentKind k) { return k == AgentKind::transformer_rnd; }

struct TrainingConfig {
  double gamma = 0.99;
  long buffer_size = 200000;
  int batch_size = 64;        // DQN replay batch
  int minibatch_size = 128;   // PPO-family minibatch
  int rollout_len = 256;
  int transformer_rollout_len = 512;
  int update_epochs = 4;
  double clip_eps = 0.2;
  long total_steps = 1000000;
  int n_envs = 8;
  double learning_rate = 2.5e-4;
  double adam_epsilon = 1e-5;

  double gae_lambda = 0.95;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;

  long target_update = 2000;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_fraction = 0.1;
  long learning_starts = 1000;
  int train_frequency = 4;
  double huber_delta = 1.0;

  double eta = 1.0;          // weight of the intrinsic reward (RND's after std normalization)
  int intrinsic_epochs = 1;  // optimization passes of the curiosity module per rollout

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
  int rollout_for(AgentKind kind) const { return uses_transformer(kind) ? transformer_rollout_len : rollout_len; }
};

}  // namespace url_lens::agents
