#include "url_lens/latentlab/latent_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace url_lens::latentlab {

static_assert(std::endian::native == std::endian::little, "latent dumps assume a little-endian host");

void write_latents(const std::filesystem::path& f32_path, const LatentDump& dump, const std::string& config_hash) {
  std::vector<float> data(static_cast<std::size_t>(dump.codes.size()));
  for (Eigen::Index i = 0; i < dump.codes.size(); ++i) data[static_cast<std::size_t>(i)] = static_cast<float>(dump.codes.data()[i]);
  {
    std::ofstream f(f32_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + f32_path.string());
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  nlohmann::ordered_json meta;
  meta["n"] = dump.codes.rows();
  meta["dim"] = dump.codes.cols();
  meta["agent"] = dump.agent;
  meta["step"] = dump.step;
  meta["config_hash"] = config_hash;
  auto sidecar = f32_path;
  sidecar.replace_extension(".json");
  std::ofstream j(sidecar);
  j << meta.dump(2) << '\n';
}

LatentDump read_latents(const std::filesystem::path& f32_path) {
  auto sidecar = f32_path;
  sidecar.replace_extension(".json");
  std::ifstream j(sidecar);
  if (!j) throw std::runtime_error("missing latent sidecar " + sidecar.string());
  const auto meta = nlohmann::json::parse(j);
  LatentDump dump;
  dump.agent = meta.at("agent").get<std::string>();
  dump.step = meta.at("step").get<long>();
  const auto n = meta.at("n").get<Eigen::Index>();
  const auto dim = meta.at("dim").get<Eigen::Index>();
  std::vector<float> data(static_cast<std::size_t>(n * dim));
  std::ifstream f(f32_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + f32_path.string());
  f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (f.gcount() != static_cast<std::streamsize>(data.size() * sizeof(float))) {
    throw std::runtime_error("truncated latent dump " + f32_path.string());
  }
  dump.codes.resize(n, dim);
  for (std::size_t i = 0; i < data.size(); ++i) dump.codes.data()[i] = data[i];
  return dump;
}

}  // namespace url_lens::latentlab
