#pragma once

#include <filesystem>
#include <vector>

#include "url_lens/metrics/clustering.hpp"

namespace url_lens::latentlab {

using metrics::Points;

struct Projection {
  Points coords;                 // n x 2
  Points components;             // 2 x dim, unit rows
  double explained[2] = {0, 0};  // variances along the two components
  double total_variance = 0.0;
};

/// Top-2 principal components of the centred codes (population covariance).
/// Each component is flipped so its largest-magnitude loading is positive.
/// Throws std::invalid_argument for fewer than three codes.
Projection project_2d(const Points& codes);

struct ProjectionTable {
  Points coords;  // n x 2
  std::vector<int> labels;
};

/// Writes `x,y,label` rows after a config_hash comment.
void write_projection_csv(const std::filesystem::path& path, const Points& coords, const std::vector<int>& labels,
                          const std::string& config_hash);
/// Reads the same layout; also accepts external t-SNE/UMAP exports with an
/// `x,y[,label]` header.
ProjectionTable read_projection_csv(const std::filesystem::path& path);

}  // namespace url_lens::latentlab
