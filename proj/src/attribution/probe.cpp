#include "url_lens/attribution/probe.hpp"

#include "url_lens/common/rng.hpp"
#include "url_lens/procenv/vec_runner.hpp"

namespace url_lens::attribution {

ProbeSet make_probe_set(std::uint64_t run_seed, int count, const procenv::EnvConfig& env) {
  ProbeSet probe;
  probe.run_seed = run_seed;
  probe.level_seeds = procenv::held_out_seeds(run_seed, count);
  Rng rng(mix_seed(run_seed, 0x9be5));
  for (std::uint64_t seed : probe.level_seeds) {
    auto state = procenv::reset(procenv::generate_level(seed, env.difficulty));
    const int steps = rng.integer(0, 12);
    for (int t = 0; t < steps; ++t) {
      const auto action = static_cast<procenv::Action>(rng.index(procenv::kNumActions));
      auto next = procenv::step(state, action, env);
      if (next.done) break;
      state = next.state;
    }
    probe.frames.push_back(procenv::render(state));
  }
  return probe;
}

}  // namespace url_lens::attribution
