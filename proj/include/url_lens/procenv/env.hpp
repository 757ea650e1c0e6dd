#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "url_lens/common/image.hpp"
#include "url_lens/procenv/level.hpp"

namespace url_lens::procenv {

inline constexpr std::size_t kObservationBytes = static_cast<std::size_t>(kFrameSize) * kFrameSize * kChannels;

/// 64x64x3 frame, row-major HWC, row 0 at the top.
struct Observation {
  std::array<std::uint8_t, kObservationBytes> pixels{};
  bool operator==(const Observation&) const = default;
};

struct EnvConfig {
  Difficulty difficulty;
  int timeout = 500;
  double coin_reward = 10.0;
};

struct EnvState {
  LevelSpec level;
  int agent_x = 0;
  int agent_y = 0;
  int t = 0;
  bool done = false;
};

struct StepResult {
  EnvState state;
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

namespace palette {
inline constexpr Rgb kBackground{135, 206, 235};
inline constexpr Rgb kPlatform{139, 90, 43};
inline constexpr Rgb kGap{200, 30, 30};
inline constexpr Rgb kCoin{255, 215, 0};
inline constexpr Rgb kAgent{30, 60, 220};
}  // namespace palette

EnvState reset(const LevelSpec& level);

/// Throws std::logic_error when `state.done`.
StepResult step(const EnvState& state, Action action, const EnvConfig& config = {});

Observation render(const EnvState& state);

RgbImage to_image(const Observation& obs);

/// Top-left pixel of grid cell (x, y); y counts rows from the bottom.
inline std::pair<int, int> cell_origin(int x, int y) {
  return {x * kCellPixels, kFrameSize - (y + 1) * kCellPixels};
}

}  // namespace url_lens::procenv
