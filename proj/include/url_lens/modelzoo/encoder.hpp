#pragma once

#include <span>
#include <vector>

#include "url_lens/nn/layers.hpp"
#include "url_lens/procenv/env.hpp"

namespace url_lens::modelzoo {

using nn::Matrix;
using nn::Shape3;

struct ConvStage {
  int channels = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
};

/// Default: the classic three-stage game CNN on 64x64x3, ending in a 4x4x64 map.
struct EncoderConfig {
  Shape3 input{procenv::kFrameSize, procenv::kFrameSize, procenv::kChannels};
  std::vector<ConvStage> stages{{32, 8, 4, 0}, {64, 4, 2, 0}, {64, 3, 1, 0}};
};

Shape3 encoder_output_shape(const EncoderConfig& config);

/// Conv-ReLU stages. The first conv skips its input gradient.
template <typename T>
nn::Sequential<T> make_conv_encoder(const EncoderConfig& config);

/// Pixels scaled to [0,1], one observation per row, HWC order.
template <typename T>
Matrix<T> observations_to_input(std::span<const procenv::Observation> observations);

template <typename T>
Matrix<T> observation_to_input(const procenv::Observation& observation) {
  return observations_to_input<T>(std::span(&observation, 1));
}

}  // namespace url_lens::modelzoo
