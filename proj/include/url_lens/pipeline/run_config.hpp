#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "url_lens/agents/config.hpp"
#include "url_lens/attribution/saliency.hpp"
#include "url_lens/intrinsic/icm.hpp"
#include "url_lens/intrinsic/rnd.hpp"
#include "url_lens/modelzoo/networks.hpp"
#include "url_lens/procenv/env.hpp"

namespace url_lens::pipeline {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnvSection {
  procenv::EnvConfig env;
  int level_pool_size = 10;
};

struct NetSection {
  int hidden = 512;
  int embed_dim = 128;
  int heads = 8;
  int layers = 4;
  int ffn_dim = 256;
};

struct AttributionSection {
  int probe_frames = 32;
  std::vector<attribution::Method> methods{attribution::Method::gradcam, attribution::Method::lrp};
  double lrp_epsilon = 1e-9;
  std::string gradcam_target = "argmax";
};

struct VaeSection {
  int frames = 5000;  // reservoir size per agent, also the VAE dataset
  int epochs = 10;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int latent = 32;
  int reconstruction_frames = 8;
};

struct MetricsSection {
  double coverage_tau = 0.5;
  int entropy_bins = 128;
  int bin_restarts = 4;
  int cluster_k = 10;
  int kmeans_restarts = 20;
  int reference_frames = 5000;  // pooled frames for the shared binning VAE
};

struct RunConfig {
  std::vector<agents::AgentKind> agents{agents::kAllAgents.begin(), agents::kAllAgents.end()};
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "out";
  agents::TrainingConfig training;
  EnvSection env;
  NetSection net;
  intrinsic::IcmConfig icm;
  intrinsic::RndConfig rnd;
  AttributionSection attribution;
  VaeSection vae;
  MetricsSection metrics;

  modelzoo::NetConfig net_config() const;
  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// Unknown keys and ill-typed values raise ConfigError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical form with every knob, output_dir included.
nlohmann::ordered_json to_json(const RunConfig& config);

/// fnv1a of the canonical JSON without output_dir, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace url_lens::pipeline
