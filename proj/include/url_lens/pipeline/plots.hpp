#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "url_lens/common/image.hpp"

namespace url_lens::pipeline {

/// 5x7 bitmap text; lowercase renders as uppercase, unknown glyphs as blanks.
void draw_text(RgbImage& image, int x, int y, std::string_view text, Rgb color, int scale = 1);
int text_width(std::string_view text, int scale = 1);

struct Series {
  std::string name;
  Rgb color{0, 0, 0};
  std::vector<double> x;
  std::vector<double> y;
};

RgbImage line_plot(const std::vector<Series>& series, std::string_view title, int width = 480, int height = 320);

/// Points coloured by label (labels < 0 drawn grey).
RgbImage scatter_plot(const std::vector<double>& x, const std::vector<double>& y, const std::vector<int>& labels,
                      std::string_view title, int size = 320);

/// Row-major tiling with `pad` pixels of white between tiles.
RgbImage tile(const std::vector<RgbImage>& images, int columns, int pad = 2);

/// Stacks images vertically, each with a caption strip above it.
RgbImage captioned_column(const std::vector<RgbImage>& images, const std::vector<std::string>& captions);

Rgb categorical_color(int index);

}  // namespace url_lens::pipeline
