#pragma once

#include <optional>

#include "url_lens/attribution/saliency.hpp"
#include "url_lens/modelzoo/networks.hpp"

namespace url_lens::attribution {

/// ReLU(sum_k alpha_k A^k) with alpha_k the spatial mean of the gradient.
/// Both inputs are HWC-flattened maps of `shape`; the result is H x W, not normalized.
std::vector<double> grad_cam_coarse(std::span<const double> activations, std::span<const double> gradients,
                                    nn::Shape3 shape);

/// Index of the largest score (first on ties).
template <typename T>
int argmax_row(const nn::Matrix<T>& scores, nn::Index row = 0);

/// Grad-CAM on the net's final conv map for one preprocessed input row.
/// `target` defaults to the argmax score. Throws std::out_of_range for a bad target.
template <typename T>
SaliencyMap grad_cam(modelzoo::AttributableNet<T>& net, const nn::Matrix<T>& input, std::optional<int> target = {});

}  // namespace url_lens::attribution
