#pragma once

#include <cstdint>
#include <vector>

#include "url_lens/procenv/env.hpp"

namespace url_lens::attribution {

/// Fixed frames from held-out levels, shared by every checkpoint of a run.
struct ProbeSet {
  std::uint64_t run_seed = 0;
  std::vector<std::uint64_t> level_seeds;
  std::vector<procenv::Observation> frames;

  std::size_t size() const { return frames.size(); }
};

/// One frame per held-out level after a random number of random-policy steps.
ProbeSet make_probe_set(std::uint64_t run_seed, int count = 32, const procenv::EnvConfig& env = {});

}  // namespace url_lens::attribution
