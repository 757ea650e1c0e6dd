#include "url_lens/agents/schedule.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

#include "url_lens/agents/config.hpp"

namespace url_lens::agents {

std::vector<long> checkpoint_schedule(long total_steps) {
  if (total_steps < kMinScheduledSteps) {
    throw std::invalid_argument("checkpoint_schedule: total_steps must be at least " +
                                std::to_string(kMinScheduledSteps));
  }
  // Fractions in per-mille so rounding is exact integer arithmetic.
  static constexpr std::array<long, 5> kPermille = {0, 100, 500, 800, 995};
  std::vector<long> steps;
  for (long p : kPermille) steps.push_back((total_steps * p + 500) / 1000);
  return steps;
}

double epsilon_at(long step, long total_steps, double start, double end, double fraction) {
  const double horizon = fraction * static_cast<double>(total_steps);
  if (horizon <= 0.0) return end;
  const double progress = std::min(1.0, static_cast<double>(step) / horizon);
  return start + (end - start) * progress;
}

std::string_view agent_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::dqn: return "dqn";
    case AgentKind::ppo: return "ppo";
    case AgentKind::icm: return "icm";
    case AgentKind::rnd: return "rnd";
    case AgentKind::transformer_rnd: return "transformer_rnd";
  }
  return "?";
}

AgentKind parse_agent(std::string_view name) {
  for (AgentKind k : kAllAgents) {
    if (agent_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown agent '" + std::string(name) + "'");
}

void TrainingConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("TrainingConfig: ") + what);
  };
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(clip_eps > 0.0, "clip_eps must be positive");
  require(buffer_size > 0, "buffer_size must be positive");
  require(batch_size > 0 && minibatch_size > 0, "batch sizes must be positive");
  require(rollout_len > 0 && transformer_rollout_len > 0, "rollout lengths must be positive");
  require(static_cast<long>(rollout_len) * n_envs >= minibatch_size, "rollout_len * n_envs must cover a minibatch");
  require(static_cast<long>(transformer_rollout_len) * n_envs >= minibatch_size,
          "transformer_rollout_len * n_envs must cover a minibatch");
  require(update_epochs > 0, "update_epochs must be positive");
  require(total_steps > 0, "total_steps must be positive");
  require(n_envs > 0, "n_envs must be positive");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(target_update > 0 && train_frequency > 0, "DQN intervals must be positive");
  require(eps_start >= eps_end && eps_end >= 0.0 && eps_start <= 1.0, "epsilon schedule out of range");
  require(huber_delta > 0.0, "huber_delta must be positive");
  require(eta >= 0.0, "eta must be non-negative");
  require(intrinsic_epochs >= 0, "intrinsic_epochs must be non-negative");
}

}  // namespace url_lens::agents
