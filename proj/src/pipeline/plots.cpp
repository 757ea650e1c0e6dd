#include "url_lens/pipeline/plots.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

namespace url_lens::pipeline {

namespace {

struct Glyph {
  char c;
  std::array<std::uint8_t, 7> rows;  // 5 low bits, MSB on the left
};

constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}}, {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}}, {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}}, {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}}, {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}}, {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
};

const Glyph* glyph(char c) {
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& g : kFont) {
    if (g.c == u) return &g;
  }
  return nullptr;
}

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kAxis{60, 60, 60};
constexpr Rgb kGrid{225, 225, 225};

struct Frame {
  int left, top, right, bottom;
  double x0, x1, y0, y1;

  int px(double x) const { return left + static_cast<int>(std::lround((x - x0) / (x1 - x0) * (right - left))); }
  int py(double y) const { return bottom - static_cast<int>(std::lround((y - y0) / (y1 - y0) * (bottom - top))); }
};

std::string short_number(double v) {
  char buf[32];
  const double a = std::abs(v);
  if (a >= 1e6) std::snprintf(buf, sizeof buf, "%.1fM", v / 1e6);
  else if (a >= 1e4) std::snprintf(buf, sizeof buf, "%.0fK", v / 1e3);
  else if (a >= 100 || a == 0.0) std::snprintf(buf, sizeof buf, "%.0f", v);
  else std::snprintf(buf, sizeof buf, "%.2g", v);
  return buf;
}

void padded_range(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

void draw_axes(RgbImage& img, const Frame& f) {
  for (int i = 0; i <= 4; ++i) {
    const int y = f.top + (f.bottom - f.top) * i / 4;
    img.line(f.left, y, f.right, y, kGrid);
    const double v = f.y1 - (f.y1 - f.y0) * i / 4.0;
    const auto label = short_number(v);
    draw_text(img, f.left - 4 - text_width(label), y - 3, label, kAxis);
  }
  img.line(f.left, f.top, f.left, f.bottom, kAxis);
  img.line(f.left, f.bottom, f.right, f.bottom, kAxis);
  const auto lo = short_number(f.x0), hi = short_number(f.x1);
  draw_text(img, f.left, f.bottom + 4, lo, kAxis);
  draw_text(img, f.right - text_width(hi), f.bottom + 4, hi, kAxis);
}

}  // namespace

int text_width(std::string_view text, int scale) { return static_cast<int>(text.size()) * 6 * scale; }

void draw_text(RgbImage& image, int x, int y, std::string_view text, Rgb color, int scale) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const Glyph* g = glyph(text[i]);
    if (!g) continue;
    const int gx = x + static_cast<int>(i) * 6 * scale;
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 5; ++c) {
        if (!(g->rows[static_cast<std::size_t>(r)] & (0x10 >> c))) continue;
        image.fill_rect(gx + c * scale, y + r * scale, gx + (c + 1) * scale, y + (r + 1) * scale, color);
      }
    }
  }
}

Rgb categorical_color(int index) {
  static constexpr std::array<Rgb, 10> kPalette = {{{31, 119, 180},
                                                     {255, 127, 14},
                                                     {44, 160, 44},
                                                     {214, 39, 40},
                                                     {148, 103, 189},
                                                     {140, 86, 75},
                                                     {227, 119, 194},
                                                     {127, 127, 127},
                                                     {188, 189, 34},
                                                     {23, 190, 207}}};
  if (index < 0) return {170, 170, 170};
  return kPalette[static_cast<std::size_t>(index) % kPalette.size()];
}

RgbImage line_plot(const std::vector<Series>& series, std::string_view title, int width, int height) {
  RgbImage img(width, height, kWhite);
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  padded_range(y0, y1);
  if (!std::isfinite(x0) || x1 <= x0) {
    x0 = 0.0;
    x1 = 1.0;
  }
  const Frame f{52, 24, width - 12, height - 18 - 12 * static_cast<int>((series.size() + 2) / 3), x0, x1, y0, y1};
  draw_text(img, (width - text_width(title)) / 2, 6, title, kAxis);
  draw_axes(img, f);
  for (const auto& s : series) {
    bool have = false;
    int lx = 0, ly = 0;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) {
        have = false;
        continue;
      }
      const int x = f.px(s.x[i]), y = f.py(s.y[i]);
      if (have) img.line(lx, ly, x, y, s.color);
      lx = x;
      ly = y;
      have = true;
    }
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const int lx = 12 + static_cast<int>(i % 3) * (width / 3);
    const int ly = f.bottom + 16 + 12 * static_cast<int>(i / 3);
    img.fill_rect(lx, ly + 2, lx + 10, ly + 5, series[i].color);
    draw_text(img, lx + 14, ly, series[i].name, kAxis);
  }
  return img;
}

RgbImage scatter_plot(const std::vector<double>& x, const std::vector<double>& y, const std::vector<int>& labels,
                      std::string_view title, int size) {
  RgbImage img(size, size, kWhite);
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x0 = std::min(x0, x[i]);
    x1 = std::max(x1, x[i]);
    y0 = std::min(y0, y[i]);
    y1 = std::max(y1, y[i]);
  }
  padded_range(x0, x1);
  padded_range(y0, y1);
  const Frame f{52, 24, size - 12, size - 20, x0, x1, y0, y1};
  draw_text(img, (size - text_width(title)) / 2, 6, title, kAxis);
  draw_axes(img, f);
  for (std::size_t i = 0; i < x.size(); ++i) {
    img.dot(f.px(x[i]), f.py(y[i]), 1, categorical_color(i < labels.size() ? labels[i] : -1));
  }
  return img;
}

RgbImage tile(const std::vector<RgbImage>& images, int columns, int pad) {
  if (images.empty() || columns < 1) return RgbImage(1, 1, kWhite);
  int cw = 0, ch = 0;
  for (const auto& im : images) {
    cw = std::max(cw, im.width);
    ch = std::max(ch, im.height);
  }
  const int rows = (static_cast<int>(images.size()) + columns - 1) / columns;
  const int cols = std::min<int>(columns, static_cast<int>(images.size()));
  RgbImage out(cols * cw + (cols + 1) * pad, rows * ch + (rows + 1) * pad, kWhite);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int r = static_cast<int>(i) / columns, c = static_cast<int>(i) % columns;
    out.blit(images[i], pad + c * (cw + pad), pad + r * (ch + pad));
  }
  return out;
}

RgbImage captioned_column(const std::vector<RgbImage>& images, const std::vector<std::string>& captions) {
  int w = 0, h = 0;
  for (const auto& im : images) {
    w = std::max(w, im.width);
    h += im.height + 14;
  }
  RgbImage out(std::max(w, 1), std::max(h, 1), kWhite);
  int y = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (i < captions.size()) draw_text(out, 2, y + 3, captions[i], kAxis);
    out.blit(images[i], 0, y + 14);
    y += images[i].height + 14;
  }
  return out;
}

}  // namespace url_lens::pipeline
