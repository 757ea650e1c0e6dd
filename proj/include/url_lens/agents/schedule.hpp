#pragma once

#include <vector>

namespace url_lens::agents {

inline constexpr long kMinScheduledSteps = 1000;

/// Attribution checkpoints at 0, 10, 50, 80 and 99.5 percent of training,
/// rounded to the nearest step. Throws for total_steps < 1000.
std::vector<long> checkpoint_schedule(long total_steps);

/// Linear anneal from `start` to `end` over the first `fraction` of training.
double epsilon_at(long step, long total_steps, double start, double end, double fraction);

}  // namespace url_lens::agents
