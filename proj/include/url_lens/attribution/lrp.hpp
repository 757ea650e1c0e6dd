#pragma once

#include <optional>
#include <vector>

#include "url_lens/attribution/saliency.hpp"
#include "url_lens/modelzoo/networks.hpp"

namespace url_lens::attribution {

inline constexpr double kLrpEpsilon = 1e-9;

struct LrpResult {
  SaliencyMap map;                  // positive part of pixel relevance, max-normalized
  std::vector<double> pixel;        // signed, summed over channels, H x W
  std::vector<double> input;        // signed, per input element
  double target_score = 0.0;
};

/// Propagates the target score from the output back to the input through the
/// network's relevance path. Throws nn::UnsupportedLayerError for layers
/// without a rule and std::out_of_range for a bad target.
template <typename T>
LrpResult lrp(modelzoo::AttributableNet<T>& net, const nn::Matrix<T>& input, std::optional<int> target = {},
              double epsilon = kLrpEpsilon);

/// Relevance through an explicit layer chain (forward is run here).
template <typename T>
nn::Matrix<T> lrp_through(std::span<nn::Layer<T>* const> layers, const nn::Matrix<T>& input, int target, T epsilon,
                          double* target_score = nullptr);

}  // namespace url_lens::attribution
