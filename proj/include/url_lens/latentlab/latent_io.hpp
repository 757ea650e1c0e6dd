#pragma once

#include <filesystem>
#include <string>

#include "url_lens/metrics/clustering.hpp"

namespace url_lens::latentlab {

struct LatentDump {
  metrics::Points codes;  // n x dim
  std::string agent;
  long step = 0;
};

/// Raw little-endian f32, row-major, plus a JSON sidecar {n, dim, agent, step}
/// next to it (same stem, .json).
void write_latents(const std::filesystem::path& f32_path, const LatentDump& dump, const std::string& config_hash);
LatentDump read_latents(const std::filesystem::path& f32_path);

}  // namespace url_lens::latentlab
