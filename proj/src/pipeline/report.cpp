#include "url_lens/pipeline/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "url_lens/agents/schedule.hpp"
#include "url_lens/attribution/attribute.hpp"
#include "url_lens/latentlab/projection.hpp"
#include "url_lens/pipeline/plots.hpp"

namespace url_lens::pipeline {

namespace fs = std::filesystem;
using agents::AgentKind;
using nlohmann::ordered_json;

const std::vector<std::string>& reported_scalars() {
  static const std::vector<std::string> names{
      "/coverage_pct",
      "/trajectory_entropy",
      "/exploration_coverage",
      "/silhouette",
      "/davies_bouldin",
      "/calinski_harabasz",
      "/attention/gradcam/diversity",
      "/attention/gradcam/change_rate",
      "/attention/gradcam/spread",
      "/attention/gradcam/coverage_pct",
      "/attention/lrp/diversity",
      "/attention/lrp/change_rate",
      "/attention/lrp/spread",
      "/attention/lrp/coverage_pct",
      "/training/final_episode_return",
      "/training/final_success_rate",
      "/vae/final_loss",
      "/vae/heldout_mse",
  };
  return names;
}

std::string display_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::dqn: return "DQN";
    case AgentKind::ppo: return "PPO";
    case AgentKind::icm: return "ICM";
    case AgentKind::rnd: return "RND";
    case AgentKind::transformer_rnd: return "Transformer-RND";
  }
  return "?";
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string cell(const ordered_json& rec, const char* key, const char* field) {
  if (!rec.contains(key)) return "missing";
  const ordered_json* v = &rec[key];
  if (field) {
    if (!v->is_object() || !v->contains(field)) return "missing";
    v = &(*v)[field];
  }
  if (!v->is_number()) return "missing";
  return fmt(v->get<double>());
}

const ordered_json* find(const ordered_json& j, const std::string& pointer) {
  const ordered_json::json_pointer p(pointer);
  return j.contains(p) ? &j.at(p) : nullptr;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream f(path);
  std::string line;
  bool header = true;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> row;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) row.push_back(c);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_figure(const fs::path& path, const RgbImage& image, std::vector<std::string>& artifacts,
                  const fs::path& root) {
  write_png(path, image);
  artifacts.push_back(fs::relative(path, root).generic_string());
}

RgbImage reward_panels(const fs::path& logs, const RunConfig& config, std::uint64_t seed) {
  // train_log columns: step=0, mean_episode_return=2, mean_extrinsic=4, mean_intrinsic=5, mean_total=6
  const std::pair<int, const char*> panels[] = {
      {5, "intrinsic reward"}, {4, "extrinsic reward"}, {6, "total reward"}, {2, "episode return"}};
  std::vector<RgbImage> images;
  for (const auto& [col, title] : panels) {
    std::vector<Series> series;
    for (std::size_t i = 0; i < config.agents.size(); ++i) {
      const std::string name(agents::agent_name(config.agents[i]));
      const auto path = logs / ("train_log_" + name + ".csv");
      if (!fs::exists(path)) continue;
      Series s{display_name(config.agents[i]), categorical_color(static_cast<int>(i)), {}, {}};
      for (const auto& row : read_csv_rows(path)) {
        s.x.push_back(std::stod(row.at(0)));
        s.y.push_back(std::stod(row.at(static_cast<std::size_t>(col))));
      }
      series.push_back(std::move(s));
    }
    images.push_back(line_plot(series, std::string(title) + " seed " + std::to_string(seed)));
  }
  return tile(images, 2, 4);
}

}  // namespace

std::string table1_csv(const ordered_json& agents_summary, const std::vector<AgentKind>& order,
                       const std::string& config_hash, const char* field) {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << '\n';
  os << "Agent,Coverage (%),Entropy,Silhouette,Davies-Bouldin\n";
  for (AgentKind a : order) {
    const std::string name(agents::agent_name(a));
    os << display_name(a);
    if (!agents_summary.contains(name)) {
      os << ",missing,missing,missing,missing\n";
      continue;
    }
    const auto& rec = agents_summary[name];
    os << ',' << cell(rec, "coverage_pct", field) << ',' << cell(rec, "trajectory_entropy", field) << ','
       << cell(rec, "silhouette", field) << ',' << cell(rec, "davies_bouldin", field) << '\n';
  }
  return os.str();
}

std::vector<std::string> build_report(const RunConfig& config, const Layout& layout, const std::string& config_hash,
                                      bool& gaps) {
  gaps = false;
  const fs::path dir = layout.report();
  fs::create_directories(dir);
  std::vector<std::string> artifacts;

  std::vector<std::pair<std::uint64_t, ordered_json>> per_seed;
  ordered_json missing = ordered_json::array();
  for (auto s : config.seeds) {
    const auto path = layout.metrics(s) / "metrics.json";
    if (!fs::exists(path)) {
      gaps = true;
      missing.push_back("seed_" + std::to_string(s));
      continue;
    }
    std::ifstream f(path);
    per_seed.emplace_back(s, ordered_json::parse(f));
  }

  ordered_json summary = ordered_json::object();
  for (AgentKind a : config.agents) {
    const std::string name(agents::agent_name(a));
    ordered_json rec = ordered_json::object();
    int present = 0;
    for (const auto& [s, m] : per_seed) {
      if (m["agents"].contains(name)) {
        ++present;
      } else {
        gaps = true;
        missing.push_back("seed_" + std::to_string(s) + "/" + name);
      }
    }
    for (const auto& pointer : reported_scalars()) {
      std::vector<double> values;
      ordered_json per = ordered_json::array();
      for (const auto& [s, m] : per_seed) {
        if (!m["agents"].contains(name)) continue;
        const auto* v = find(m["agents"][name], pointer);
        if (v && v->is_number()) {
          values.push_back(v->get<double>());
          per.push_back(*v);
        } else {
          per.push_back(nullptr);
        }
      }
      const double med = median(values);
      ordered_json entry;
      entry["median"] = std::isfinite(med) ? ordered_json(med) : ordered_json(nullptr);
      if (values.empty()) {
        entry["min"] = entry["max"] = nullptr;
      } else {
        entry["min"] = *std::min_element(values.begin(), values.end());
        entry["max"] = *std::max_element(values.begin(), values.end());
      }
      entry["n"] = values.size();
      entry["per_seed"] = std::move(per);
      rec[ordered_json::json_pointer(pointer)] = std::move(entry);
    }
    rec["seeds_present"] = present;
    summary[name] = std::move(rec);
  }

  auto echo = to_json(config);
  echo.erase("output_dir");
  ordered_json out;
  out["config_hash"] = config_hash;
  out["seeds"] = config.seeds;
  out["agents"] = std::move(summary);
  out["missing"] = std::move(missing);
  out["config"] = std::move(echo);
  {
    const auto path = dir / "metrics.json";
    std::ofstream(path) << out.dump(2) << '\n';
    artifacts.push_back(fs::relative(path, layout.root).generic_string());
  }
  {
    const auto path = dir / "table1.csv";
    std::ofstream(path) << table1_csv(out["agents"], config.agents, config_hash, "median");
    artifacts.push_back(fs::relative(path, layout.root).generic_string());
  }

  // Reward curves, one figure per seed.
  for (auto s : config.seeds) {
    if (!fs::exists(layout.logs(s))) continue;
    write_figure(dir / ("rewards_seed" + std::to_string(s) + ".png"), reward_panels(layout.logs(s), config, s),
                 artifacts, layout.root);
  }

  if (config.seeds.empty()) return artifacts;
  const auto first = config.seeds.front();
  const auto steps = agents::checkpoint_schedule(config.training.total_steps);
  const int shown = std::min(8, config.attribution.probe_frames);

  // Saliency grids: rows are checkpoints, columns probe frames.
  for (AgentKind a : config.agents) {
    const std::string name(agents::agent_name(a));
    const auto sdir = layout.saliency(first, name);
    for (auto method : config.attribution.methods) {
      std::vector<RgbImage> rows;
      std::vector<std::string> captions;
      for (long step : steps) {
        std::vector<RgbImage> cells;
        for (int f = 0; f < shown; ++f) {
          auto png = attribution::saliency_csv_path(sdir, method, step, f);
          png.replace_extension(".png");
          if (fs::exists(png)) cells.push_back(upscale(read_png(png), 2));
        }
        if (cells.empty()) continue;
        rows.push_back(tile(cells, shown));
        captions.push_back("step " + std::to_string(step));
      }
      if (rows.empty()) continue;
      write_figure(dir / ("saliency_" + name + "_" + std::string(attribution::method_name(method)) + ".png"),
                   captioned_column(rows, captions), artifacts, layout.root);
    }
  }

  // Reconstructions stacked per agent.
  {
    std::vector<RgbImage> images;
    std::vector<std::string> captions;
    for (AgentKind a : config.agents) {
      const auto png = layout.vae(first) / ("recon_" + std::string(agents::agent_name(a)) + ".png");
      if (!fs::exists(png)) continue;
      images.push_back(read_png(png));
      captions.push_back(display_name(a) + " input / reconstruction");
    }
    if (!images.empty()) write_figure(dir / "reconstructions.png", captioned_column(images, captions), artifacts, layout.root);
  }

  // Latent projections coloured by cluster.
  for (AgentKind a : config.agents) {
    const std::string name(agents::agent_name(a));
    const auto csv = layout.latents(first) / (name + "_proj.csv");
    if (!fs::exists(csv)) continue;
    const auto table = latentlab::read_projection_csv(csv);
    std::vector<double> x(static_cast<std::size_t>(table.coords.rows())), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = table.coords(static_cast<long>(i), 0);
      y[i] = table.coords(static_cast<long>(i), 1);
    }
    write_figure(dir / ("projection_" + name + ".png"), scatter_plot(x, y, table.labels, display_name(a) + " latent PCA"),
                 artifacts, layout.root);
  }

  // Attention metrics over checkpoints, Grad-CAM, first seed.
  if (!per_seed.empty() && per_seed.front().first == first) {
    const auto& m = per_seed.front().second;
    const std::pair<const char*, const char*> panels[] = {{"diversity", "gradcam diversity"},
                                                          {"spread", "gradcam spread"},
                                                          {"coverage_pct", "gradcam coverage"},
                                                          {"change_rate_from_previous", "gradcam change rate"}};
    std::vector<RgbImage> images;
    for (const auto& [key, title] : panels) {
      std::vector<Series> series;
      for (std::size_t i = 0; i < config.agents.size(); ++i) {
        const std::string name(agents::agent_name(config.agents[i]));
        const auto* cps = find(m, "/agents/" + name + "/attention/gradcam/checkpoints");
        if (!cps) continue;
        Series s{display_name(config.agents[i]), categorical_color(static_cast<int>(i)), {}, {}};
        for (const auto& cp : *cps) {
          if (!cp[key].is_number()) continue;
          s.x.push_back(cp["step"].get<double>());
          s.y.push_back(cp[key].get<double>());
        }
        series.push_back(std::move(s));
      }
      images.push_back(line_plot(series, title));
    }
    write_figure(dir / "attention_over_training.png", tile(images, 2, 4), artifacts, layout.root);
  }
  return artifacts;
}

}  // namespace url_lens::pipeline
