#include "url_lens/pipeline/stages.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "url_lens/agents/schedule.hpp"
#include "url_lens/agents/trainer.hpp"
#include "url_lens/attribution/attribute.hpp"
#include "url_lens/latentlab/kmeans.hpp"
#include "url_lens/latentlab/latent_io.hpp"
#include "url_lens/latentlab/projection.hpp"
#include "url_lens/latentlab/vae.hpp"
#include "url_lens/metrics/attention.hpp"
#include "url_lens/metrics/clustering.hpp"
#include "url_lens/metrics/exploration.hpp"
#include "url_lens/modelzoo/checkpoint.hpp"
#include "url_lens/pipeline/report.hpp"

namespace url_lens::pipeline {

namespace fs = std::filesystem;
using agents::AgentKind;
using nlohmann::ordered_json;

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::train: return "train";
    case Stage::attribute: return "attribute";
    case Stage::vae: return "vae";
    case Stage::metrics: return "metrics";
    case Stage::report: return "report";
  }
  return "?";
}

PipelineOptions options_from_environment() {
  PipelineOptions o;
  const char* det = std::getenv("URL_LENS_DETERMINISTIC");
  o.deterministic = det && std::string(det) == "1";
  o.jobs = o.deterministic ? 1 : std::max(1u, std::thread::hardware_concurrency());
  return o;
}

fs::path Layout::seed_dir(std::uint64_t seed) const { return root / ("seed_" + std::to_string(seed)); }

fs::path Layout::saliency(std::uint64_t seed, std::string_view agent) const {
  return seed_dir(seed) / "saliency" / std::string(agent);
}

std::string stage_key(Stage stage, std::optional<std::uint64_t> seed, std::string_view agent) {
  std::string key;
  if (seed) key += "seed_" + std::to_string(*seed) + "/";
  if (!agent.empty()) key += std::string(agent) + "/";
  return key + std::string(stage_name(stage));
}

void write_frames(const fs::path& path, const std::vector<procenv::Observation>& frames,
                  const std::string& config_hash) {
  fs::create_directories(path.parent_path());
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    for (const auto& o : frames) {
      f.write(reinterpret_cast<const char*>(o.pixels.data()), static_cast<std::streamsize>(o.pixels.size()));
    }
  }
  ordered_json meta;
  meta["n"] = frames.size();
  meta["bytes_per_frame"] = procenv::kObservationBytes;
  meta["config_hash"] = config_hash;
  auto side = path;
  side.replace_extension(".json");
  std::ofstream(side) << meta.dump(2) << '\n';
}

std::vector<procenv::Observation> read_frames(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read frames " + path.string());
  std::vector<procenv::Observation> out;
  procenv::Observation o;
  while (f.read(reinterpret_cast<char*>(o.pixels.data()), static_cast<std::streamsize>(o.pixels.size()))) {
    out.push_back(o);
  }
  return out;
}

namespace {

ordered_json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return ordered_json::parse(f);
}

void write_json(const fs::path& path, const ordered_json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::uint64_t agent_salt(AgentKind k) { return 0x5eed00 + static_cast<std::uint64_t>(k); }

}  // namespace

Pipeline::Pipeline(RunConfig config, PipelineOptions options)
    : config_(std::move(config)),
      options_(options),
      hash_(config_hash(config_)),
      layout_{config_.output_dir},
      manifest_(config_.output_dir) {
  if (options_.deterministic) options_.jobs = 1;
  options_.jobs = std::max(1, options_.jobs);
}

void Pipeline::log(const std::string& line) {
  std::lock_guard lock(log_mutex_);
  std::ostream& os = options_.log ? *options_.log : std::cerr;
  os << line << std::endl;
}

std::string Pipeline::relative(const fs::path& p) const { return fs::relative(p, layout_.root).generic_string(); }

bool Pipeline::run_stage(const std::string& key, const std::vector<std::string>& upstream, bool need_all_upstream,
                         const std::function<std::vector<std::string>()>& body) {
  if (!options_.force && manifest_.is_fresh(key, hash_, upstream)) {
    log(key + ": up to date");
    return true;
  }
  std::vector<std::string> missing;
  for (const auto& up : upstream) {
    if (!manifest_.is_complete(up, hash_)) missing.push_back(up);
  }
  if (!missing.empty() && (need_all_upstream || missing.size() == upstream.size())) {
    std::string msg = "upstream incomplete:";
    for (const auto& m : missing) msg += " " + m;
    manifest_.mark(key, StageStatus::skipped, hash_, msg);
    log(key + ": skipped (" + msg + ")");
    return false;
  }
  log(key + ": running");
  const auto t0 = std::chrono::steady_clock::now();
  StageRecord rec;
  rec.config_hash = hash_;
  bool ok = true;
  try {
    rec.artifacts = body();
    rec.status = StageStatus::complete;
  } catch (const std::exception& e) {
    rec.status = StageStatus::failed;
    rec.error = e.what();
    ok = false;
  }
  rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest_.record(key, rec, upstream);
  log(key + ": " + std::string(status_name(rec.status)) + " in " + fmt(rec.wall_clock_s) + " s" +
      (ok ? "" : " (" + rec.error + ")"));
  return ok;
}

bool Pipeline::for_jobs(const std::vector<Job>& jobs, const std::function<bool(const Job&)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> ok{true};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      if (!fn(jobs[i])) ok = false;
    }
  };
  const int n = std::min<int>(options_.jobs, static_cast<int>(jobs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return ok;
}

bool Pipeline::run(std::vector<Stage> stages, const Selection& sel) {
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  std::vector<std::uint64_t> seeds;
  for (auto s : config_.seeds) {
    if (!sel.seed || *sel.seed == s) seeds.push_back(s);
  }
  std::vector<AgentKind> chosen;
  for (auto a : config_.agents) {
    if (!sel.agent || *sel.agent == a) chosen.push_back(a);
  }
  if (seeds.empty() || chosen.empty()) throw ConfigError("selection matches no configured seed/agent");
  std::vector<Job> jobs;
  for (auto s : seeds) {
    for (auto a : chosen) jobs.push_back({s, a});
  }
  fs::create_directories(layout_.root);
  write_json(layout_.root / "config.json", to_json(config_));

  bool ok = true;
  for (Stage stage : stages) {
    switch (stage) {
      case Stage::train:
        ok &= for_jobs(jobs, [&](const Job& j) {
          const auto name = agents::agent_name(j.agent);
          return run_stage(stage_key(Stage::train, j.seed, name), {}, true, [&] { return train(j.seed, j.agent); });
        });
        break;
      case Stage::attribute:
      case Stage::vae:
        ok &= for_jobs(jobs, [&](const Job& j) {
          const auto name = agents::agent_name(j.agent);
          const std::vector<std::string> up{stage_key(Stage::train, j.seed, name)};
          return run_stage(stage_key(stage, j.seed, name), up, true, [&] {
            return stage == Stage::attribute ? attribute(j.seed, j.agent) : vae(j.seed, j.agent);
          });
        });
        break;
      case Stage::metrics:
        for (auto s : seeds) {
          std::vector<std::string> up;
          std::vector<AgentKind> available;
          for (auto a : config_.agents) {
            const auto name = agents::agent_name(a);
            const auto ka = stage_key(Stage::attribute, s, name), kv = stage_key(Stage::vae, s, name);
            up.push_back(ka);
            up.push_back(kv);
            if (manifest_.is_complete(ka, hash_) && manifest_.is_complete(kv, hash_)) available.push_back(a);
          }
          if (available.size() != config_.agents.size()) ok = false;
          ok &= run_stage(stage_key(Stage::metrics, s), up, false, [&] { return metrics(s, available); });
        }
        break;
      case Stage::report: {
        std::vector<std::string> up;
        for (auto s : config_.seeds) up.push_back(stage_key(Stage::metrics, s));
        bool gaps = false;
        const bool ran = run_stage(stage_key(Stage::report), up, false, [&] {
          return build_report(config_, layout_, hash_, gaps);
        });
        if (!ran) {
          ok = false;
        } else if (gaps) {
          // A gap-free report can be fresh; one with gaps always re-executes next time.
          manifest_.mark(stage_key(Stage::report), StageStatus::failed, hash_, "report has missing cells");
          log("report: missing cells");
          ok = false;
        }
        break;
      }
    }
  }
  return ok;
}

// ------------------------------------------------------------------ train

std::vector<std::string> Pipeline::train(std::uint64_t seed, AgentKind agent) {
  const std::string name(agents::agent_name(agent));
  agents::AgentSetup setup;
  setup.kind = agent;
  setup.training = config_.training;
  setup.net = config_.net_config();
  setup.icm = config_.icm;
  setup.rnd = config_.rnd;
  setup.runner.n_envs = config_.training.n_envs;
  setup.runner.level_pool_size = config_.env.level_pool_size;
  setup.runner.seed = seed;
  setup.runner.env = config_.env.env;
  setup.seed = mix_seed(seed, agent_salt(agent));
  setup.frame_samples = static_cast<std::size_t>(config_.vae.frames);
  if (options_.dump_frames) setup.dump_frames_dir = *options_.dump_frames / ("seed_" + std::to_string(seed) + "_" + name);

  std::vector<std::string> artifacts;
  const fs::path ckpt_dir = layout_.checkpoints(seed);
  fs::create_directories(ckpt_dir);
  auto on_checkpoint = [&](long step, modelzoo::AttributableNet<float>& net) {
    const auto params = net.parameters();
    const auto bin = modelzoo::save_checkpoint<float>(
        ckpt_dir, {name, step, hash_, nn::parameter_count(params)}, params);
    artifacts.push_back(relative(bin));
    auto side = bin;
    artifacts.push_back(relative(side.replace_extension(".json")));
    log(stage_key(Stage::train, seed, name) + ": checkpoint " + std::to_string(step));
  };
  const auto result = agents::train_agent(setup, on_checkpoint);

  const fs::path logs = layout_.logs(seed);
  fs::create_directories(logs);
  const fs::path csv = logs / ("train_log_" + name + ".csv");
  {
    std::ofstream f(csv);
    f << "# config_hash=" << hash_ << '\n'
      << "step,episodes,mean_episode_return,success_rate,mean_extrinsic,mean_intrinsic,mean_total,policy_loss,"
         "value_loss,entropy,td_loss,intrinsic_loss,epsilon\n";
    for (const auto& r : result.log) {
      f << r.step << ',' << r.episodes << ',' << fmt(r.mean_episode_return) << ',' << fmt(r.success_rate) << ','
        << fmt(r.mean_extrinsic) << ',' << fmt(r.mean_intrinsic) << ',' << fmt(r.mean_total) << ','
        << fmt(r.policy_loss) << ',' << fmt(r.value_loss) << ',' << fmt(r.entropy) << ',' << fmt(r.td_loss) << ','
        << fmt(r.intrinsic_loss) << ',' << fmt(r.epsilon) << '\n';
    }
  }
  artifacts.push_back(relative(csv));

  // Final performance: episodes finished in the last quarter of the log.
  long episodes = 0, tail_episodes = 0;
  double tail_return = 0.0, tail_success = 0.0;
  const std::size_t tail_from = result.log.size() - std::max<std::size_t>(1, result.log.size() / 4);
  for (std::size_t i = 0; i < result.log.size(); ++i) {
    const auto& r = result.log[i];
    episodes += r.episodes;
    if (i >= tail_from) {
      tail_episodes += r.episodes;
      tail_return += r.mean_episode_return * static_cast<double>(r.episodes);
      tail_success += r.success_rate * static_cast<double>(r.episodes);
    }
  }
  ordered_json summary;
  summary["config_hash"] = hash_;
  summary["agent"] = name;
  summary["steps"] = result.steps;
  summary["episodes"] = episodes;
  summary["final_episode_return"] = tail_episodes ? tail_return / static_cast<double>(tail_episodes) : 0.0;
  summary["final_success_rate"] = tail_episodes ? tail_success / static_cast<double>(tail_episodes) : 0.0;
  const fs::path summary_path = logs / ("summary_" + name + ".json");
  write_json(summary_path, summary);
  artifacts.push_back(relative(summary_path));

  const fs::path frames = layout_.frames(seed) / (name + ".u8");
  write_frames(frames, result.frames, hash_);
  artifacts.push_back(relative(frames));
  auto frames_side = frames;
  artifacts.push_back(relative(frames_side.replace_extension(".json")));
  return artifacts;
}

// -------------------------------------------------------------- attribute

std::vector<std::string> Pipeline::attribute(std::uint64_t seed, AgentKind agent) {
  const std::string name(agents::agent_name(agent));
  const auto probe = attribution::make_probe_set(seed, config_.attribution.probe_frames, config_.env.env);
  const fs::path dir = layout_.saliency(seed, name);
  fs::remove_all(dir);
  for (long step : agents::checkpoint_schedule(config_.training.total_steps)) {
    attribution::AttributionRequest req;
    req.checkpoint = modelzoo::checkpoint_path(layout_.checkpoints(seed), name, step);
    req.kind = agent;
    req.net = config_.net_config();
    req.agent = name;
    req.step = step;
    req.methods = config_.attribution.methods;
    req.lrp_epsilon = config_.attribution.lrp_epsilon;
    attribution::write_attribution(dir, attribution::attribute_checkpoint(req, probe), probe, hash_);
  }
  return {relative(dir)};
}

// -------------------------------------------------------------------- vae

namespace {

latentlab::VaeConfig vae_config(const RunConfig& c) {
  latentlab::VaeConfig v;
  v.latent = c.vae.latent;
  return v;
}

latentlab::VaeTrainConfig vae_train_config(const RunConfig& c, std::uint64_t seed) {
  latentlab::VaeTrainConfig t;
  t.epochs = c.vae.epochs;
  t.batch_size = c.vae.batch_size;
  t.learning_rate = c.vae.learning_rate;
  t.seed = seed;
  return t;
}

}  // namespace

std::vector<std::string> Pipeline::vae(std::uint64_t seed, AgentKind agent) {
  const std::string name(agents::agent_name(agent));
  const auto frames = read_frames(layout_.frames(seed) / (name + ".u8"));
  if (frames.empty()) throw std::runtime_error("no frames recorded for " + name);
  Rng init(mix_seed(seed, agent_salt(agent) ^ 0x7ae0));
  latentlab::Vae<float> model(vae_config(config_), init);
  const auto curve = latentlab::train_vae(model, frames, vae_train_config(config_, mix_seed(seed, agent_salt(agent))));

  std::vector<std::string> artifacts;
  const fs::path vdir = layout_.vae(seed);
  fs::create_directories(vdir);
  const fs::path bin = vdir / ("vae_" + name + ".bin");
  nn::save_parameters<float>(bin, model.parameters());
  artifacts.push_back(relative(bin));

  const fs::path loss_csv = vdir / ("loss_" + name + ".csv");
  {
    std::ofstream f(loss_csv);
    f << "# config_hash=" << hash_ << "\nepoch,total,reconstruction,kl\n";
    for (std::size_t e = 0; e < curve.epoch_total.size(); ++e) {
      f << e << ',' << fmt(curve.epoch_total[e]) << ',' << fmt(curve.epoch_reconstruction[e]) << ','
        << fmt(curve.epoch_kl[e]) << '\n';
    }
  }
  artifacts.push_back(relative(loss_csv));

  const std::size_t n_recon = std::min<std::size_t>(static_cast<std::size_t>(config_.vae.reconstruction_frames), frames.size());
  const std::vector<procenv::Observation> shown(frames.begin(), frames.begin() + static_cast<long>(n_recon));
  const fs::path png = vdir / ("recon_" + name + ".png"), rcsv = vdir / ("recon_" + name + ".csv");
  latentlab::export_reconstructions(model, shown, png, rcsv, hash_);
  artifacts.push_back(relative(png));
  artifacts.push_back(relative(rcsv));

  const auto probe = attribution::make_probe_set(seed, config_.attribution.probe_frames, config_.env.env);
  const auto held = latentlab::reconstruction_errors(model, probe.frames);
  double held_mean = 0.0;
  for (double e : held) held_mean += e / static_cast<double>(held.size());

  ordered_json summary;
  summary["config_hash"] = hash_;
  summary["frames"] = frames.size();
  summary["final_loss"] = curve.epoch_total.back();
  summary["final_reconstruction"] = curve.epoch_reconstruction.back();
  summary["final_kl"] = curve.epoch_kl.back();
  summary["heldout_mse"] = held_mean;
  const fs::path sj = vdir / ("summary_" + name + ".json");
  write_json(sj, summary);
  artifacts.push_back(relative(sj));

  // Latent codes, 2-D projection and cluster labels.
  const auto codes = latentlab::encode_means(model, frames);
  const fs::path ldir = layout_.latents(seed);
  fs::create_directories(ldir);
  const fs::path f32 = ldir / (name + "_" + std::to_string(config_.training.total_steps) + ".f32");
  latentlab::write_latents(f32, {codes, name, config_.training.total_steps}, hash_);
  artifacts.push_back(relative(f32));
  auto f32_side = f32;
  artifacts.push_back(relative(f32_side.replace_extension(".json")));

  latentlab::KMeansOptions km;
  km.k = config_.metrics.cluster_k;
  km.restarts = config_.metrics.kmeans_restarts;
  km.seed = mix_seed(seed, agent_salt(agent) ^ 0xc1);
  const auto clusters = latentlab::kmeans(codes, km);
  const auto proj = latentlab::project_2d(codes);
  const fs::path pcsv = ldir / (name + "_proj.csv");
  latentlab::write_projection_csv(pcsv, proj.coords, clusters.labels, hash_);
  artifacts.push_back(relative(pcsv));
  return artifacts;
}

// ---------------------------------------------------------------- metrics

namespace {

ordered_json attention_summary(const fs::path& dir, attribution::Method method, const std::vector<long>& steps,
                               int frames, double tau) {
  std::vector<std::vector<attribution::SaliencyMap>> maps;  // [checkpoint][frame]
  for (long step : steps) {
    auto& row = maps.emplace_back();
    for (int f = 0; f < frames; ++f) {
      auto m = attribution::read_saliency_csv(attribution::saliency_csv_path(dir, method, step, f));
      m.method = method;
      row.push_back(std::move(m));
    }
  }
  ordered_json checkpoints = ordered_json::array();
  double change_total = 0.0;
  for (std::size_t c = 0; c < maps.size(); ++c) {
    double div = 0.0, spread = 0.0, cov = 0.0, change = 0.0;
    for (int f = 0; f < frames; ++f) {
      const auto& m = maps[c][static_cast<std::size_t>(f)];
      div += metrics::attention_diversity(m);
      spread += metrics::attention_spread(m);
      cov += metrics::gradcam_coverage(m, tau);
      if (c > 0) change += metrics::attention_change_rate(maps[c - 1][static_cast<std::size_t>(f)], m);
    }
    ordered_json cp;
    cp["step"] = steps[c];
    cp["diversity"] = div / frames;
    cp["spread"] = spread / frames;
    cp["coverage_pct"] = cov / frames;
    cp["change_rate_from_previous"] = c > 0 ? ordered_json(change / frames) : ordered_json(nullptr);
    if (c > 0) change_total += change / frames;
    checkpoints.push_back(std::move(cp));
  }
  const auto& last = checkpoints.back();
  ordered_json s;
  s["diversity"] = last["diversity"];
  s["change_rate"] = maps.size() > 1 ? change_total / static_cast<double>(maps.size() - 1) : 0.0;
  s["spread"] = last["spread"];
  s["coverage_pct"] = last["coverage_pct"];
  s["checkpoints"] = std::move(checkpoints);
  return s;
}

}  // namespace

std::vector<std::string> Pipeline::metrics(std::uint64_t seed, const std::vector<AgentKind>& available) {
  if (available.empty()) throw std::runtime_error("no agent has complete attribution and VAE stages");
  const auto steps = agents::checkpoint_schedule(config_.training.total_steps);
  std::vector<std::string> artifacts;

  ordered_json agents_json = ordered_json::object();
  std::vector<std::vector<procenv::Observation>> frames;
  for (AgentKind a : available) {
    const std::string name(agents::agent_name(a));
    ordered_json rec;
    ordered_json attention = ordered_json::object();
    for (auto m : config_.attribution.methods) {
      attention[std::string(attribution::method_name(m))] =
          attention_summary(layout_.saliency(seed, name), m, steps, config_.attribution.probe_frames,
                            config_.metrics.coverage_tau);
    }
    rec["coverage_pct"] = attention.contains("gradcam") ? attention["gradcam"]["coverage_pct"] : ordered_json(nullptr);
    rec["trajectory_entropy"] = nullptr;  // filled below
    rec["exploration_coverage"] = nullptr;

    const auto dump = latentlab::read_latents(layout_.latents(seed) /
                                              (name + "_" + std::to_string(config_.training.total_steps) + ".f32"));
    const auto table = latentlab::read_projection_csv(layout_.latents(seed) / (name + "_proj.csv"));
    std::set<int> distinct(table.labels.begin(), table.labels.end());
    if (distinct.size() >= 2) {
      rec["silhouette"] = metrics::silhouette(dump.codes, table.labels);
      rec["davies_bouldin"] = metrics::davies_bouldin(dump.codes, table.labels);
      try {
        rec["calinski_harabasz"] = number_or_null(metrics::calinski_harabasz(dump.codes, table.labels));
      } catch (const std::exception&) {
        rec["calinski_harabasz"] = nullptr;
      }
    } else {
      rec["silhouette"] = rec["davies_bouldin"] = rec["calinski_harabasz"] = nullptr;
    }
    rec["attention"] = std::move(attention);
    const auto training = read_json(layout_.logs(seed) / ("summary_" + name + ".json"));
    rec["training"] = {{"steps", training["steps"]},
                       {"episodes", training["episodes"]},
                       {"final_episode_return", training["final_episode_return"]},
                       {"final_success_rate", training["final_success_rate"]}};
    const auto vs = read_json(layout_.vae(seed) / ("summary_" + name + ".json"));
    rec["vae"] = {{"final_loss", vs["final_loss"]},
                  {"final_reconstruction", vs["final_reconstruction"]},
                  {"final_kl", vs["final_kl"]},
                  {"heldout_mse", vs["heldout_mse"]}};
    agents_json[name] = std::move(rec);
    frames.push_back(read_frames(layout_.frames(seed) / (name + ".u8")));
  }

  // Shared bins: one reference VAE on an equal share of every agent's frames,
  // k-means over the pooled codes, then each agent's visitation histogram.
  const std::size_t share = static_cast<std::size_t>(config_.metrics.reference_frames) / available.size();
  std::vector<procenv::Observation> pooled;
  for (const auto& f : frames) pooled.insert(pooled.end(), f.begin(), f.begin() + static_cast<long>(std::min(share, f.size())));
  Rng init(mix_seed(seed, 0x2ef0));
  latentlab::Vae<float> reference(vae_config(config_), init);
  latentlab::train_vae(reference, pooled, vae_train_config(config_, mix_seed(seed, 0x2ef1)));
  const fs::path ref_bin = layout_.vae(seed) / "vae_reference.bin";
  nn::save_parameters<float>(ref_bin, reference.parameters());
  artifacts.push_back(relative(ref_bin));

  const auto pooled_codes = latentlab::encode_means(reference, pooled);
  latentlab::KMeansOptions km;
  km.k = std::min<int>(config_.metrics.entropy_bins, static_cast<int>(pooled_codes.rows()));
  km.restarts = config_.metrics.bin_restarts;
  km.seed = mix_seed(seed, 0xb1a5);
  const auto bins = latentlab::kmeans(pooled_codes, km);
  for (std::size_t i = 0; i < available.size(); ++i) {
    const std::string name(agents::agent_name(available[i]));
    const auto assignment = latentlab::assign_nearest(latentlab::encode_means(reference, frames[i]), bins.centroids);
    const auto ex = metrics::exploration_metrics(assignment, km.k);
    agents_json[name]["trajectory_entropy"] = ex.trajectory_entropy;
    agents_json[name]["exploration_coverage"] = ex.coverage_fraction;
  }

  auto echo = to_json(config_);
  echo.erase("output_dir");
  ordered_json out;
  out["config_hash"] = hash_;
  out["seed"] = seed;
  out["entropy_bins"] = km.k;
  out["agents"] = std::move(agents_json);
  ordered_json missing = ordered_json::array();
  for (auto a : config_.agents) {
    if (std::find(available.begin(), available.end(), a) == available.end()) {
      missing.push_back(std::string(agents::agent_name(a)));
    }
  }
  out["missing"] = std::move(missing);
  out["config"] = std::move(echo);
  const fs::path mj = layout_.metrics(seed) / "metrics.json";
  write_json(mj, out);
  artifacts.push_back(relative(mj));
  const fs::path table = layout_.metrics(seed) / "table1.csv";
  std::ofstream(table) << table1_csv(out["agents"], config_.agents, hash_, nullptr);
  artifacts.push_back(relative(table));
  return artifacts;
}

}  // namespace url_lens::pipeline
