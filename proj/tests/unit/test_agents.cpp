#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"
#include "url_lens/agents/dqn.hpp"
#include "url_lens/agents/ppo.hpp"
#include "url_lens/agents/schedule.hpp"
#include "url_lens/agents/trainer.hpp"

using namespace url_lens;
using namespace url_lens::agents;
using nn::Matrix;

TEST_CASE("checkpoint schedule rounds to the nearest step") {
  CHECK(checkpoint_schedule(1000) == std::vector<long>{0, 100, 500, 800, 995});
  CHECK(checkpoint_schedule(50000) == std::vector<long>{0, 5000, 25000, 40000, 49750});
  // 0.995 * 1001 = 995.995 and 0.1 * 1005 = 100.5 round up
  CHECK(checkpoint_schedule(1001)[4] == 996);
  CHECK(checkpoint_schedule(1005)[1] == 101);
  CHECK_THROWS_AS(checkpoint_schedule(999), std::invalid_argument);
}

TEST_CASE("epsilon anneals linearly then holds") {
  CHECK(epsilon_at(0, 1000, 1.0, 0.05, 0.1) == 1.0);
  CHECK(epsilon_at(50, 1000, 1.0, 0.05, 0.1) == doctest::Approx(0.525));
  CHECK(epsilon_at(100, 1000, 1.0, 0.05, 0.1) == doctest::Approx(0.05));
  CHECK(epsilon_at(900, 1000, 1.0, 0.05, 0.1) == doctest::Approx(0.05));
}

TEST_CASE("agent names round-trip") {
  for (auto k : kAllAgents) CHECK(parse_agent(agent_name(k)) == k);
  CHECK_THROWS_AS(parse_agent("a2c"), std::invalid_argument);
}

TEST_CASE("training config validation") {
  TrainingConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.rollout_len = 4;
  c.n_envs = 2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.eps_end = 0.5;
  c.eps_start = 0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(TrainingConfig{}.rollout_for(AgentKind::transformer_rnd) == 512);
  CHECK(TrainingConfig{}.rollout_for(AgentKind::rnd) == 256);
}

TEST_CASE("replay buffer overwrites the oldest slot") {
  ReplayBuffer buf(3);
  Rng rng(1);
  CHECK_THROWS_AS(buf.sample_indices(2, rng), std::logic_error);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.action = i;
    buf.push(t);
  }
  CHECK(buf.size() == 3);
  CHECK(buf.total_pushed() == 5);
  std::multiset<int> actions;
  for (std::size_t i = 0; i < 3; ++i) actions.insert(buf.at(i).action);
  CHECK(actions == std::multiset<int>{2, 3, 4});
  for (std::size_t i = 0; i < 3; ++i) CHECK(buf.serial(i) == static_cast<std::uint64_t>(buf.at(i).action));
  for (auto i : buf.sample_indices(100, rng)) CHECK(i < 3);
}

TEST_CASE("GAE equals the truncated discounted sum of TD errors") {
  Rng rng(2);
  RolloutBuffer b;
  b.length = 7;
  b.n_envs = 2;
  const double gamma = 0.9, lambda = 0.8;
  for (int i = 0; i < 14; ++i) {
    b.actions.push_back(0);
    b.rewards.push_back(rng.uniform(-1, 1));
    b.values.push_back(static_cast<float>(rng.uniform(-1, 1)));
    b.dones.push_back(i == 6 || i == 9);
  }
  b.last_values = {0.5f, -0.25f};
  compute_gae(b, gamma, lambda);
  auto idx = [&](int t, int e) { return static_cast<std::size_t>(t * 2 + e); };
  for (int e = 0; e < 2; ++e) {
    for (int t = 0; t < 7; ++t) {
      double want = 0.0, weight = 1.0;
      for (int u = t; u < 7; ++u) {
        const auto i = idx(u, e);
        const double next = b.dones[i] ? 0.0 : (u == 6 ? b.last_values[static_cast<std::size_t>(e)] : b.values[idx(u + 1, e)]);
        want += weight * (b.rewards[i] + gamma * next - b.values[i]);
        if (b.dones[i]) break;
        weight *= gamma * lambda;
      }
      CHECK(b.advantages[idx(t, e)] == doctest::Approx(want).epsilon(1e-12));
      CHECK(b.returns[idx(t, e)] == doctest::Approx(want + b.values[idx(t, e)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("advantage normalization uses the population std") {
  std::vector<double> a{1, 2, 3, 4};
  normalize_advantages(a);
  const double sd = std::sqrt(1.25);
  CHECK(a[0] == doctest::Approx(-1.5 / sd));
  CHECK(a[3] == doctest::Approx(1.5 / sd));
  std::vector<double> one{3.0};
  normalize_advantages(one);
  CHECK(one[0] == 3.0);
}

TEST_CASE("TD targets and Huber loss") {
  Matrix<double> next(2, 3);
  next << 1, 5, 2, -1, -3, -2;
  const std::vector<double> r{1.0, 0.5};
  const std::vector<std::uint8_t> done{0, 1};
  const auto y = td_targets<double>(next, r, done, 0.9);
  CHECK(y[0] == doctest::Approx(1.0 + 0.9 * 5));
  CHECK(y[1] == doctest::Approx(0.5));

  Matrix<double> q(2, 3);
  q << 0, 0, 0, 0, 0, 0;
  const std::vector<int> a{1, 2};
  const std::vector<double> targets{0.5, -3.0};
  const auto l = huber_td_loss<double>(q, a, targets, 1.0);
  // 0.5 * 0.25 and 1 * (3 - 0.5), averaged
  CHECK(l.loss == doctest::Approx((0.125 + 2.5) / 2));
  CHECK(l.grad_q(0, 1) == doctest::Approx(-0.5 / 2));
  CHECK(l.grad_q(1, 2) == doctest::Approx(1.0 / 2));
  CHECK(l.grad_q(0, 0) == 0.0);
}

TEST_CASE("PPO loss at ratio one reduces to the plain policy gradient objective") {
  modelzoo::PolicyOutput<double> out;
  out.logits = Matrix<double>(2, 3);
  out.logits << 0.0, 1.0, 2.0, 1.0, 1.0, 1.0;
  out.values = Matrix<double>(2, 1);
  out.values << 0.5, -0.5;
  const std::vector<int> actions{2, 0};
  std::vector<double> old_lp(2), adv{1.0, -2.0}, ret{1.5, 0.5};
  double entropy = 0.0;
  for (int i = 0; i < 2; ++i) {
    double z = 0.0;
    for (int j = 0; j < 3; ++j) z += std::exp(out.logits(i, j));
    old_lp[static_cast<std::size_t>(i)] = out.logits(i, actions[static_cast<std::size_t>(i)]) - std::log(z);
    for (int j = 0; j < 3; ++j) {
      const double p = std::exp(out.logits(i, j)) / z;
      entropy -= p * std::log(p) / 2;
    }
  }
  PpoCoefficients c;
  const auto l = ppo_loss(out, actions, old_lp, adv, ret, c);
  CHECK(l.policy == doctest::Approx(-(1.0 - 2.0) / 2));
  CHECK(l.value == doctest::Approx((1.0 + 1.0) / 2));
  CHECK(l.entropy == doctest::Approx(entropy));
  CHECK(l.total == doctest::Approx(l.policy + 0.5 * l.value - 0.01 * entropy));
  CHECK(l.clip_fraction == 0.0);
}

TEST_CASE("PPO ignores the gradient of clipped samples") {
  modelzoo::PolicyOutput<double> out;
  out.logits = Matrix<double>::Zero(1, 2);
  out.values = Matrix<double>::Zero(1, 1);
  const std::vector<int> a{0};
  const std::vector<double> old_lp{std::log(0.5) - 1.0}, adv{1.0}, ret{0.0};
  PpoCoefficients c;
  c.entropy_coef = 0.0;
  const auto l = ppo_loss(out, a, old_lp, adv, ret, c);
  CHECK(l.clip_fraction == 1.0);
  CHECK(l.grad_logits.cwiseAbs().maxCoeff() == 0.0);
  CHECK(l.policy == doctest::Approx(-(1.0 + c.clip_eps)));
}

TEST_CASE("PPO update rejects non-finite advantages") {
  modelzoo::NetConfig cfg;
  cfg.encoder.input = {64, 64, 3};
  Rng rng(3);
  modelzoo::ActorCritic<float> net(cfg, rng);
  nn::Adam<float> adam(net.parameters(), {});
  RolloutBuffer b;
  b.length = 2;
  b.n_envs = 1;
  b.obs.resize(2);
  b.actions = {0, 1};
  b.log_probs = {-1.0f, -1.0f};
  b.values = {0.0f, 0.0f};
  b.advantages = {0.5, std::numeric_limits<double>::quiet_NaN()};
  b.returns = {0.0, 0.0};
  b.rewards = {0.0, 0.0};
  TrainingConfig tc;
  tc.minibatch_size = 2;
  try {
    ppo_update(net, adam, b, tc, rng);
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
}

TEST_CASE("DQN update refuses an empty batch") {
  modelzoo::NetConfig cfg;
  cfg.encoder.input = {6, 6, 1};
  cfg.encoder.stages = {{2, 3, 1, 0}};
  cfg.hidden = 4;
  Rng rng(4);
  modelzoo::QNetwork<double> online(cfg, rng), target(cfg, rng);
  nn::Adam<double> adam(online.parameters(), {});
  CHECK_THROWS_AS(dqn_update(online, target, adam, DqnBatch<double>{}, 0.99, 1.0), std::invalid_argument);
}

TEST_CASE("a short training run checkpoints on schedule and is reproducible") {
  for (AgentKind kind : {AgentKind::dqn, AgentKind::icm}) {
    auto run = [&] {
      AgentSetup s;
      s.kind = kind;
      s.training.total_steps = 1000;
      s.training.n_envs = 2;
      s.training.rollout_len = 64;
      s.training.minibatch_size = 64;
      s.training.learning_starts = 900;
      s.training.batch_size = 8;
      s.training.update_epochs = 1;
      s.net.hidden = 16;
      s.icm.embedding = 16;
      s.icm.hidden = 16;
      s.runner.n_envs = 2;
      s.frame_samples = 50;
      s.seed = 5;
      std::vector<long> steps;
      std::vector<float> first_weights;
      auto res = train_agent(s, [&](long step, modelzoo::AttributableNet<float>& net) {
        steps.push_back(step);
        first_weights.push_back(net.parameters()[0]->value(0, 0));
      });
      return std::tuple(steps, first_weights, res.frames.size(), res.log.size());
    };
    const auto [steps, w, frames, rows] = run();
    CHECK(steps == checkpoint_schedule(1000));
    CHECK(frames == 50);
    CHECK(rows > 0);
    const auto [steps2, w2, frames2, rows2] = run();
    CHECK(w == w2);
  }
}
