#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace url_lens {

using Rgb = std::array<std::uint8_t, 3>;

/// Row-major interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {0, 0, 0});

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  /// Copy `src` with its top-left corner at (x, y); clipped to bounds.
  void blit(const RgbImage& src, int x, int y);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);  // half-open
  void line(int x0, int y0, int x1, int y1, Rgb c);
  void dot(int x, int y, int radius, Rgb c);
};

void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);

/// Viridis colormap, t clamped to [0,1].
Rgb viridis(double t);

/// Blend a [0,1] heatmap over a frame. `heat` is row-major with image dimensions.
RgbImage overlay_heatmap(const RgbImage& frame, std::span<const double> heat, double alpha = 0.6);

/// Nearest-neighbour upscaling by an integer factor.
RgbImage upscale(const RgbImage& src, int factor);

}  // namespace url_lens
