#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "url_lens/agents/config.hpp"
#include "url_lens/attribution/probe.hpp"
#include "url_lens/attribution/saliency.hpp"
#include "url_lens/modelzoo/networks.hpp"

namespace url_lens::attribution {

struct AttributionRequest {
  std::filesystem::path checkpoint;  // ckpt_<agent>_<step>.bin
  agents::AgentKind kind = agents::AgentKind::ppo;
  modelzoo::NetConfig net;
  std::string agent;
  long step = 0;
  std::vector<Method> methods{Method::gradcam, Method::lrp};
  double lrp_epsilon = 1e-9;
};

struct AttributionOutput {
  std::vector<SaliencyMap> maps;               // ordered by method, then frame
  std::vector<std::vector<double>> lrp_signed;  // per frame, empty without LRP
};

/// Attribution runs in double precision on the checkpoint's parameters.
/// Throws std::runtime_error if the checkpoint is missing.
AttributionOutput attribute_checkpoint(const AttributionRequest& request, const ProbeSet& probe);

/// Writes <method>_<step>_<frame>.png (heat overlay) and .csv (normalized
/// values) per map, and lrp_<step>_<frame>_signed.csv for raw LRP relevance.
void write_attribution(const std::filesystem::path& dir, const AttributionOutput& output, const ProbeSet& probe,
                       const std::string& config_hash);

std::filesystem::path saliency_csv_path(const std::filesystem::path& dir, Method method, long step, int frame);
SaliencyMap read_saliency_csv(const std::filesystem::path& path);

}  // namespace url_lens::attribution
