#include "url_lens/attribution/attribute.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "url_lens/agents/trainer.hpp"
#include "url_lens/attribution/gradcam.hpp"
#include "url_lens/attribution/lrp.hpp"
#include "url_lens/common/image.hpp"
#include "url_lens/modelzoo/checkpoint.hpp"

namespace url_lens::attribution {

namespace fs = std::filesystem;

AttributionOutput attribute_checkpoint(const AttributionRequest& request, const ProbeSet& probe) {
  if (!fs::exists(request.checkpoint)) {
    throw std::runtime_error("checkpoint not found: " + request.checkpoint.string());
  }
  Rng init(0);
  auto net = agents::make_network<double>(request.kind, request.net, init);
  modelzoo::load_checkpoint<double>(request.checkpoint, net->parameters());

  AttributionOutput out;
  const bool want_lrp = std::find(request.methods.begin(), request.methods.end(), Method::lrp) != request.methods.end();
  if (want_lrp) out.lrp_signed.resize(probe.size());
  for (Method m : request.methods) {
    for (std::size_t f = 0; f < probe.size(); ++f) {
      const auto x = modelzoo::observation_to_input<double>(probe.frames[f]);
      SaliencyMap map;
      if (m == Method::gradcam) {
        map = grad_cam(*net, x);
      } else {
        auto r = lrp(*net, x, std::nullopt, request.lrp_epsilon);
        map = std::move(r.map);
        out.lrp_signed[f] = std::move(r.pixel);
      }
      map.agent = request.agent;
      map.step = request.step;
      map.frame_id = static_cast<int>(f);
      check_saliency(map);
      out.maps.push_back(std::move(map));
    }
  }
  return out;
}

namespace {

std::string stem(const char* method, long step, int frame) {
  return std::string(method) + "_" + std::to_string(step) + "_" + std::to_string(frame);
}

void write_grid_csv(const fs::path& path, std::span<const double> values, int width, const std::string& config_hash) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "# config_hash=" << config_hash << '\n';
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    f << buf << ((i + 1) % static_cast<std::size_t>(width) == 0 ? '\n' : ',');
  }
}

}  // namespace

fs::path saliency_csv_path(const fs::path& dir, Method method, long step, int frame) {
  return dir / (stem(method_name(method).data(), step, frame) + ".csv");
}

void write_attribution(const fs::path& dir, const AttributionOutput& output, const ProbeSet& probe,
                       const std::string& config_hash) {
  fs::create_directories(dir);
  for (const auto& map : output.maps) {
    const auto csv = saliency_csv_path(dir, map.method, map.step, map.frame_id);
    write_grid_csv(csv, map.values, map.width, config_hash);
    auto png = csv;
    png.replace_extension(".png");
    write_png(png, overlay_heatmap(procenv::to_image(probe.frames[static_cast<std::size_t>(map.frame_id)]), map.values));
  }
  if (output.lrp_signed.empty() || output.maps.empty()) return;
  const long step = output.maps.front().step;
  for (std::size_t f = 0; f < output.lrp_signed.size(); ++f) {
    if (output.lrp_signed[f].empty()) continue;
    write_grid_csv(dir / (stem("lrp", step, static_cast<int>(f)) + "_signed.csv"), output.lrp_signed[f],
                   procenv::kFrameSize, config_hash);
  }
}

SaliencyMap read_saliency_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  SaliencyMap map;
  std::string line;
  int rows = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      map.values.push_back(std::stod(cell));
      ++cols;
    }
    map.width = cols;
    ++rows;
  }
  map.height = rows;
  // <method>_<step>_<frame>.csv
  const std::string name = path.stem().string();
  const auto a = name.find('_');
  const auto b = name.rfind('_');
  if (a == std::string::npos || a == b) throw std::runtime_error("unexpected saliency file name " + name);
  map.method = parse_method(name.substr(0, a));
  map.step = std::stol(name.substr(a + 1, b - a - 1));
  map.frame_id = std::stoi(name.substr(b + 1));
  return map;
}

}  // namespace url_lens::attribution
