#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace url_lens::procenv {

inline constexpr int kFrameSize = 64;
inline constexpr int kChannels = 3;
inline constexpr int kCellPixels = 4;
inline constexpr int kGridRows = kFrameSize / kCellPixels;
inline constexpr int kGridColumns = kFrameSize / kCellPixels;

enum class Action : int { noop = 0, left, right, jump, jump_left, jump_right };
inline constexpr int kNumActions = 6;

std::string_view action_name(Action a);

/// Generator knobs. Defaults produce a 16-column level that fits the frame.
struct Difficulty {
  int width = kGridColumns;
  int min_height = 1;
  int max_height = 6;
  int max_step_up = 2;
  int max_gaps = 3;
  int max_gap_width = 2;
  double gap_probability = 0.3;
  int jump_height = 3;
  int max_retries = 64;
};

struct LevelSpec {
  std::uint64_t seed = 0;
  int width = 0;
  std::vector<int> gap_positions;
  std::vector<int> platform_heights;  // solid cells are rows [0, height); 0 on gap columns
  int coin_column = 0;
  int jump_height = 3;

  bool is_gap(int column) const;
  int height(int column) const { return platform_heights.at(static_cast<std::size_t>(column)); }
  bool operator==(const LevelSpec&) const = default;
};

/// Outcome of one action under the level's movement rules.
struct Move {
  int x = 0;
  int y = 0;
  bool fell = false;
  bool reached_coin = false;
};

/// Movement rules: a jump lifts a supported agent by jump_height, then the
/// horizontal move is applied (blocked by taller columns), then unsupported
/// agents that did not jump this step drop one row. Dropping below row 0 is a fall.
Move apply_action(const LevelSpec& level, int x, int y, Action action);

/// Breadth-first search over (x, y) cells for an action sequence reaching the coin.
std::optional<std::vector<Action>> solve_level(const LevelSpec& level, int start_x, int start_y);

/// Deterministic in (seed, difficulty). Throws std::runtime_error when no
/// traversable layout is found within difficulty.max_retries draws.
LevelSpec generate_level(std::uint64_t seed, const Difficulty& difficulty = {});

}  // namespace url_lens::procenv
