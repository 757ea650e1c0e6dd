#include "url_lens/procenv/env.hpp"

#include <stdexcept>

namespace url_lens::procenv {

EnvState reset(const LevelSpec& level) {
  EnvState s;
  s.level = level;
  s.agent_x = 0;
  s.agent_y = level.height(0);
  return s;
}

StepResult step(const EnvState& state, Action action, const EnvConfig& config) {
  if (state.done) throw std::logic_error("step: environment is done; reset before stepping");
  StepResult r;
  r.state = state;
  const Move m = apply_action(state.level, state.agent_x, state.agent_y, action);
  r.state.agent_x = m.x;
  r.state.agent_y = m.y;
  r.state.t = state.t + 1;
  if (m.reached_coin) r.reward = config.coin_reward;
  r.done = m.reached_coin || m.fell || r.state.t >= config.timeout;
  r.state.done = r.done;
  r.observation = render(r.state);
  return r;
}

namespace {

void fill_cell(Observation& obs, int x, int y, Rgb color) {
  if (x < 0 || x >= kGridColumns || y < 0 || y >= kGridRows) return;
  const auto [px, py] = cell_origin(x, y);
  for (int dy = 0; dy < kCellPixels; ++dy) {
    for (int dx = 0; dx < kCellPixels; ++dx) {
      const std::size_t o = (static_cast<std::size_t>(py + dy) * kFrameSize + (px + dx)) * kChannels;
      obs.pixels[o] = color[0];
      obs.pixels[o + 1] = color[1];
      obs.pixels[o + 2] = color[2];
    }
  }
}

}  // namespace

Observation render(const EnvState& state) {
  Observation obs;
  for (std::size_t i = 0; i < kObservationBytes; i += 3) {
    obs.pixels[i] = palette::kBackground[0];
    obs.pixels[i + 1] = palette::kBackground[1];
    obs.pixels[i + 2] = palette::kBackground[2];
  }
  const LevelSpec& level = state.level;
  for (int x = 0; x < level.width; ++x) {
    const int h = level.height(x);
    if (h == 0) {
      fill_cell(obs, x, 0, palette::kGap);
      continue;
    }
    for (int y = 0; y < h; ++y) fill_cell(obs, x, y, palette::kPlatform);
  }
  fill_cell(obs, level.coin_column, level.height(level.coin_column), palette::kCoin);
  // A fallen agent (y < 0) is off-screen.
  fill_cell(obs, state.agent_x, state.agent_y, palette::kAgent);
  return obs;
}

RgbImage to_image(const Observation& obs) {
  RgbImage img(kFrameSize, kFrameSize);
  img.pixels.assign(obs.pixels.begin(), obs.pixels.end());
  return img;
}

}  // namespace url_lens::procenv
