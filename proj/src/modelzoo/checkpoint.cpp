#include "url_lens/modelzoo/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace url_lens::modelzoo {

namespace {

std::filesystem::path sidecar(const std::filesystem::path& bin) {
  auto p = bin;
  p.replace_extension(".json");
  return p;
}

}  // namespace

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, const std::string& agent, long step) {
  return dir / ("ckpt_" + agent + "_" + std::to_string(step) + ".bin");
}

template <typename T>
std::filesystem::path save_checkpoint(const std::filesystem::path& dir, const CheckpointInfo& info,
                                      const std::vector<nn::Parameter<T>*>& params) {
  std::filesystem::create_directories(dir);
  const auto bin = checkpoint_path(dir, info.agent, info.step);
  nn::save_parameters(bin, params);
  nlohmann::ordered_json j;
  j["agent"] = info.agent;
  j["step"] = info.step;
  j["config_hash"] = info.config_hash;
  j["parameter_count"] = nn::parameter_count(params);
  std::ofstream(sidecar(bin)) << j.dump(2) << "\n";
  return bin;
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& bin_path) {
  std::ifstream in(sidecar(bin_path));
  if (!in) throw std::runtime_error("checkpoint sidecar missing for " + bin_path.string());
  const auto j = nlohmann::json::parse(in);
  return {j.at("agent").get<std::string>(), j.at("step").get<long>(), j.at("config_hash").get<std::string>(),
          j.at("parameter_count").get<std::size_t>()};
}

template <typename T>
CheckpointInfo load_checkpoint(const std::filesystem::path& bin_path, const std::vector<nn::Parameter<T>*>& params) {
  if (!std::filesystem::exists(bin_path)) throw std::runtime_error("checkpoint not found: " + bin_path.string());
  CheckpointInfo info = read_checkpoint_info(bin_path);
  if (info.parameter_count != nn::parameter_count(params)) {
    throw std::runtime_error("checkpoint parameter count mismatch: " + bin_path.string());
  }
  nn::load_parameters(bin_path, params);
  return info;
}

template std::filesystem::path save_checkpoint<float>(const std::filesystem::path&, const CheckpointInfo&,
                                                      const std::vector<nn::Parameter<float>*>&);
template std::filesystem::path save_checkpoint<double>(const std::filesystem::path&, const CheckpointInfo&,
                                                       const std::vector<nn::Parameter<double>*>&);
template CheckpointInfo load_checkpoint<float>(const std::filesystem::path&, const std::vector<nn::Parameter<float>*>&);
template CheckpointInfo load_checkpoint<double>(const std::filesystem::path&,
                                                const std::vector<nn::Parameter<double>*>&);

}  // namespace url_lens::modelzoo
