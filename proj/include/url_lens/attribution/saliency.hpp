#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace url_lens::attribution {

enum class Method { gradcam, lrp };

std::string_view method_name(Method m);
/// Throws std::invalid_argument for unknown names.
Method parse_method(std::string_view name);

/// Nonnegative map, max entry 1 unless identically zero. Row-major.
struct SaliencyMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  Method method = Method::gradcam;
  std::string agent;
  long step = 0;
  int frame_id = 0;

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Scales so the maximum is 1; an all-zero (or all-nonpositive) input stays zero.
/// Negative entries are clamped to zero first.
std::vector<double> max_normalize(std::span<const double> values);

/// Half-pixel-centred bilinear resampling with edge clamping.
std::vector<double> upsample_bilinear(std::span<const double> src, int src_h, int src_w, int dst_h, int dst_w);

/// Throws std::logic_error if the map violates nonnegativity or max normalization.
void check_saliency(const SaliencyMap& map);

}  // namespace url_lens::attribution
