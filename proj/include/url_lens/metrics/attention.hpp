#pragma once

#include <span>

#include "url_lens/attribution/saliency.hpp"

namespace url_lens::metrics {

using attribution::SaliencyMap;

struct AttentionMetrics {
  double diversity = 0.0;
  double change_rate = 0.0;
  double spread = 0.0;
  double coverage_pct = 0.0;
};

/// Shannon entropy of the mass-normalized map over ln(H*W). Zero mass -> 0.
double attention_diversity(std::span<const double> values);
double attention_diversity(const SaliencyMap& map);

/// Total-variation distance between two mass-normalized maps. A zero-mass
/// map counts as distance 0 from another zero-mass map and 1 from anything else.
double attention_change_rate(std::span<const double> p, std::span<const double> q);
/// Throws std::invalid_argument when frame, method or size differ.
double attention_change_rate(const SaliencyMap& a, const SaliencyMap& b);

/// RMS distance of mass from its centroid divided by the half-diagonal of
/// the pixel-centre grid, sqrt((H-1)^2 + (W-1)^2) / 2. Zero mass -> 0.
double attention_spread(std::span<const double> values, int height, int width);
double attention_spread(const SaliencyMap& map);

/// 100 * fraction of pixels >= tau. Throws std::invalid_argument for tau outside (0, 1].
double gradcam_coverage(std::span<const double> values, double tau = 0.5);
double gradcam_coverage(const SaliencyMap& map, double tau = 0.5);

}  // namespace url_lens::metrics
