#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "url_lens/nn/serialize.hpp"

namespace url_lens::modelzoo {

struct CheckpointInfo {
  std::string agent;
  long step = 0;
  std::string config_hash;
  std::size_t parameter_count = 0;
};

/// `ckpt_<agent>_<step>.bin` inside `dir`.
std::filesystem::path checkpoint_path(const std::filesystem::path& dir, const std::string& agent, long step);

/// Writes the parameter file and its JSON sidecar (same stem, .json).
template <typename T>
std::filesystem::path save_checkpoint(const std::filesystem::path& dir, const CheckpointInfo& info,
                                      const std::vector<nn::Parameter<T>*>& params);

/// Loads parameters; throws std::runtime_error if the file is missing or
/// its layout does not match.
template <typename T>
CheckpointInfo load_checkpoint(const std::filesystem::path& bin_path, const std::vector<nn::Parameter<T>*>& params);

CheckpointInfo read_checkpoint_info(const std::filesystem::path& bin_path);

}  // namespace url_lens::modelzoo
