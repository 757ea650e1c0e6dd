#include <algorithm>
#include <set>

#include "doctest.h"
#include "url_lens/procenv/env.hpp"
#include "url_lens/procenv/vec_runner.hpp"

using namespace url_lens;
using namespace url_lens::procenv;

TEST_CASE("level generation is a pure function of the seed") {
  for (std::uint64_t s : {0ull, 1ull, 77ull, 123456789ull}) {
    const auto a = generate_level(s), b = generate_level(s);
    CHECK(a == b);
    CHECK(a.width == kGridColumns);
    CHECK(a.platform_heights.size() == static_cast<std::size_t>(a.width));
  }
  CHECK_FALSE(generate_level(1) == generate_level(2));
}

TEST_CASE("every generated level is solvable from its start") {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto level = generate_level(s);
    const auto start = reset(level);
    const auto plan = solve_level(level, start.agent_x, start.agent_y);
    REQUIRE(plan.has_value());
    // replay the plan through the environment itself
    auto state = start;
    bool coin = false;
    for (auto a : *plan) {
      auto r = step(state, a);
      state = r.state;
      if (r.done) {
        coin = r.reward > 0.0;
        break;
      }
    }
    CHECK(coin);
  }
}

TEST_CASE("stepping a finished episode is a logic error") {
  auto state = reset(generate_level(3));
  state.done = true;
  CHECK_THROWS_AS(step(state, Action::right), std::logic_error);
}

TEST_CASE("timeout ends the episode without reward") {
  EnvConfig cfg;
  cfg.timeout = 5;
  auto state = reset(generate_level(4));
  StepResult r;
  for (int t = 0; t < 5; ++t) {
    r = step(state, Action::noop, cfg);
    state = r.state;
  }
  CHECK(r.done);
  CHECK(r.reward == 0.0);
}

TEST_CASE("rendered frames use the palette and show the agent") {
  const auto state = reset(generate_level(5));
  const auto obs = render(state);
  const auto [px, py] = cell_origin(state.agent_x, state.agent_y);
  const std::size_t i = (static_cast<std::size_t>(py + 1) * kFrameSize + static_cast<std::size_t>(px + 1)) * 3;
  CHECK(obs.pixels[i] == palette::kAgent[0]);
  CHECK(obs.pixels[i + 1] == palette::kAgent[1]);
  CHECK(obs.pixels[i + 2] == palette::kAgent[2]);
  CHECK(obs.pixels[0] == palette::kBackground[0]);
}

TEST_CASE("held-out seeds never meet the training pool") {
  for (std::uint64_t run : {0ull, 9ull}) {
    const auto pool = level_pool_seeds(run, 10);
    const auto held = held_out_seeds(run, 200);
    std::set<std::uint64_t> p(pool.begin(), pool.end());
    CHECK(p.size() == 10);
    for (auto s : held) CHECK(p.count(s) == 0);
  }
}

TEST_CASE("vector runner resets finished envs onto pool levels and reports next frames") {
  RunnerConfig cfg;
  cfg.n_envs = 3;
  cfg.level_pool_size = 4;
  cfg.env.timeout = 7;
  VecRunner runner(cfg);
  std::set<std::uint64_t> pool;
  for (const auto& l : runner.level_pool()) pool.insert(l.seed);
  int finished = 0;
  for (int t = 0; t < 30; ++t) {
    const std::vector<int> actions(3, static_cast<int>(Action::noop));
    const auto r = runner.step(actions);
    for (int e = 0; e < 3; ++e) {
      if (r.dones[static_cast<std::size_t>(e)]) {
        // fresh episode starts at t = 0 on a pool level
        CHECK(runner.states()[static_cast<std::size_t>(e)].t == 0);
        CHECK(pool.count(runner.states()[static_cast<std::size_t>(e)].level.seed) == 1);
      } else {
        CHECK(r.next_observations[static_cast<std::size_t>(e)] == runner.observations()[static_cast<std::size_t>(e)]);
      }
    }
    finished += static_cast<int>(r.finished.size());
  }
  CHECK(finished >= 3 * 4);
}

TEST_CASE("identically seeded runners agree step for step") {
  RunnerConfig cfg;
  cfg.n_envs = 2;
  cfg.seed = 11;
  VecRunner a(cfg), b(cfg);
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> act{rng.integer(0, kNumActions - 1), rng.integer(0, kNumActions - 1)};
    const auto ra = a.step(act), rb = b.step(act);
    CHECK(ra.rewards == rb.rewards);
    CHECK(a.observations() == b.observations());
  }
}
