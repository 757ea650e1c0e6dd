#pragma once

#include <filesystem>
#include <vector>

#include "url_lens/nn/layers.hpp"

namespace url_lens::nn {

/// Binary layout: "URLP" magic, u32 version, u32 count, then per parameter
/// u32 name length, name bytes, u32 rows, u32 cols, rows*cols little-endian f32.
template <typename T>
void save_parameters(const std::filesystem::path& path, const std::vector<Parameter<T>*>& params);

/// Names and shapes must match the stored layout exactly.
template <typename T>
void load_parameters(const std::filesystem::path& path, const std::vector<Parameter<T>*>& params);

}  // namespace url_lens::nn
