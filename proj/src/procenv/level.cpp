#include "url_lens/procenv/level.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <string>

#include "url_lens/common/rng.hpp"

namespace url_lens::procenv {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::noop: return "noop";
    case Action::left: return "left";
    case Action::right: return "right";
    case Action::jump: return "jump";
    case Action::jump_left: return "jump-left";
    case Action::jump_right: return "jump-right";
  }
  return "?";
}

bool LevelSpec::is_gap(int column) const {
  return std::find(gap_positions.begin(), gap_positions.end(), column) != gap_positions.end();
}

namespace {

bool supported(const LevelSpec& level, int x, int y) {
  const int h = level.height(x);
  return h > 0 && y == h;
}

int horizontal_delta(Action a) {
  switch (a) {
    case Action::left:
    case Action::jump_left: return -1;
    case Action::right:
    case Action::jump_right: return 1;
    default: return 0;
  }
}

bool is_jump(Action a) { return a == Action::jump || a == Action::jump_left || a == Action::jump_right; }

}  // namespace

Move apply_action(const LevelSpec& level, int x, int y, Action action) {
  Move m{x, y, false, false};
  bool jumped = false;
  if (is_jump(action) && supported(level, x, y)) {
    m.y = std::min(y + level.jump_height, kGridRows - 1);
    jumped = true;
  }
  const int nx = std::clamp(x + horizontal_delta(action), 0, level.width - 1);
  if (level.height(nx) <= m.y) m.x = nx;
  if (!jumped && !supported(level, m.x, m.y)) m.y -= 1;
  m.fell = m.y < 0;
  m.reached_coin = !m.fell && m.x == level.coin_column;
  return m;
}

std::optional<std::vector<Action>> solve_level(const LevelSpec& level, int start_x, int start_y) {
  const int rows = kGridRows;
  const auto cell = [&](int x, int y) { return static_cast<std::size_t>(y) * level.width + x; };
  std::vector<int> parent(static_cast<std::size_t>(rows) * level.width, -1);
  std::vector<int> via(parent.size(), -1);
  std::vector<char> seen(parent.size(), 0);
  std::deque<std::pair<int, int>> queue;
  seen[cell(start_x, start_y)] = 1;
  queue.emplace_back(start_x, start_y);
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    for (int a = 0; a < kNumActions; ++a) {
      const Move m = apply_action(level, x, y, static_cast<Action>(a));
      if (m.fell) continue;
      const std::size_t c = cell(m.x, m.y);
      if (seen[c]) continue;
      seen[c] = 1;
      parent[c] = static_cast<int>(cell(x, y));
      via[c] = a;
      if (m.reached_coin) {
        std::vector<Action> path;
        for (int cur = static_cast<int>(c); parent[static_cast<std::size_t>(cur)] >= 0;
             cur = parent[static_cast<std::size_t>(cur)]) {
          path.push_back(static_cast<Action>(via[static_cast<std::size_t>(cur)]));
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.emplace_back(m.x, m.y);
    }
  }
  return std::nullopt;
}

namespace {

LevelSpec draw_layout(std::uint64_t seed, const Difficulty& d, Rng& rng) {
  LevelSpec level;
  level.seed = seed;
  level.width = d.width;
  level.jump_height = d.jump_height;
  level.platform_heights.assign(static_cast<std::size_t>(d.width), 0);

  int h = rng.integer(d.min_height, std::min(d.max_height, d.min_height + 2));
  int gaps = 0;
  int c = 0;
  while (c < d.width) {
    // Columns 0-1 are the start pad; the last two are a flat coin pad.
    const bool pad = c < 2 || c >= d.width - 2;
    if (!pad && gaps < d.max_gaps && rng.bernoulli(d.gap_probability)) {
      const int w = std::min(rng.integer(1, d.max_gap_width), d.width - 2 - c);
      for (int g = 0; g < w; ++g) level.gap_positions.push_back(c + g);
      c += w;
      ++gaps;
      // Always land on a column before another gap can start.
      if (c < d.width) {
        h = std::clamp(h + rng.integer(-2, 1), d.min_height, d.max_height);
        level.platform_heights[static_cast<std::size_t>(c)] = h;
        ++c;
      }
      continue;
    }
    if (c >= d.width - 1) {
      level.platform_heights[static_cast<std::size_t>(c)] = level.platform_heights[static_cast<std::size_t>(c - 1)];
    } else {
      if (c > 0) h = std::clamp(h + rng.integer(-2, d.max_step_up), d.min_height, d.max_height);
      level.platform_heights[static_cast<std::size_t>(c)] = h;
    }
    ++c;
  }
  level.coin_column = d.width - 1;
  return level;
}

}  // namespace

LevelSpec generate_level(std::uint64_t seed, const Difficulty& d) {
  if (d.width < 4 || d.width > kGridColumns) throw std::invalid_argument("generate_level: width out of range");
  if (d.min_height < 1 || d.max_height < d.min_height || d.max_height + d.jump_height >= kGridRows) {
    throw std::invalid_argument("generate_level: heights exceed the rendered vertical extent");
  }
  Rng rng(mix_seed(seed, 0x1e7e1ULL));
  for (int attempt = 0; attempt < d.max_retries; ++attempt) {
    LevelSpec level = draw_layout(seed, d, rng);
    if (solve_level(level, 0, level.height(0))) return level;
  }
  throw std::runtime_error("generate_level: no traversable layout for seed " + std::to_string(seed) + " after " +
                           std::to_string(d.max_retries) + " attempts");
}

}  // namespace url_lens::procenv
