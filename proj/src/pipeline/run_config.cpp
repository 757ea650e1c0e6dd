#include "url_lens/pipeline/run_config.hpp"

#include <fstream>
#include <set>

#include "url_lens/common/hash.hpp"

namespace url_lens::pipeline {

namespace {

using nlohmann::json;

// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename V>
  void get(const char* key, V& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<V>();
    } catch (const json::exception& e) {
      throw ConfigError(where() + "." + key + ": " + e.what());
    }
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const char* key) const { return j_.at(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + path_ + "." + k);
    }
  }

 private:
  std::string where() const { return path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

modelzoo::NetConfig RunConfig::net_config() const {
  modelzoo::NetConfig c;
  c.hidden = net.hidden;
  c.embed_dim = net.embed_dim;
  c.heads = net.heads;
  c.layers = net.layers;
  c.ffn_dim = net.ffn_dim;
  return c;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(!agents.empty(), "agents must not be empty");
  require(!seeds.empty(), "seeds must not be empty");
  try {
    training.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(training.total_steps >= 1000, "training.total_steps must be at least 1000 (checkpoint schedule)");
  require(env.level_pool_size > 0, "env.level_pool_size must be positive");
  require(env.env.timeout > 0, "env.timeout must be positive");
  require(net.hidden > 0 && net.embed_dim > 0 && net.heads > 0 && net.layers > 0 && net.ffn_dim > 0,
          "net sizes must be positive");
  require(net.embed_dim % net.heads == 0, "net.embed_dim must be divisible by net.heads");
  require(icm.beta > 0.0, "icm.beta must be positive");
  require(attribution.probe_frames > 0 && attribution.probe_frames <= 500, "attribution.probe_frames must lie in [1, 500]");
  require(!attribution.methods.empty(), "attribution.methods must not be empty");
  require(attribution.lrp_epsilon > 0.0, "attribution.lrp_epsilon must be positive");
  require(attribution.gradcam_target == "argmax", "attribution.gradcam_target supports only \"argmax\"");
  require(vae.frames >= 16, "vae.frames must be at least 16");
  require(vae.epochs > 0 && vae.batch_size > 0 && vae.learning_rate > 0.0, "vae training knobs must be positive");
  require(vae.latent > 0, "vae.latent must be positive");
  require(vae.reconstruction_frames > 0 && vae.reconstruction_frames <= attribution.probe_frames,
          "vae.reconstruction_frames must lie in [1, probe_frames]");
  require(metrics.coverage_tau > 0.0 && metrics.coverage_tau <= 1.0, "metrics.coverage_tau must lie in (0, 1]");
  require(metrics.entropy_bins >= 2, "metrics.entropy_bins must be at least 2");
  require(metrics.cluster_k >= 2 && metrics.cluster_k < vae.frames, "metrics.cluster_k must lie in [2, vae.frames)");
  require(metrics.kmeans_restarts > 0 && metrics.bin_restarts > 0, "k-means restarts must be positive");
  require(metrics.reference_frames >= metrics.entropy_bins, "metrics.reference_frames must cover entropy_bins");
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  Section root(j, "config");
  if (root.has("agents")) {
    c.agents.clear();
    for (const auto& a : root.raw("agents")) {
      try {
        c.agents.push_back(agents::parse_agent(a.get<std::string>()));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("agents: ") + e.what());
      }
    }
  }
  root.get("seeds", c.seeds);
  std::string out = c.output_dir.string();
  root.get("output_dir", out);
  c.output_dir = out;

  auto& t = c.training;
  {
    Section s = root.sub("training");
    s.get("gamma", t.gamma);
    s.get("buffer_size", t.buffer_size);
    s.get("batch_size", t.batch_size);
    s.get("minibatch_size", t.minibatch_size);
    s.get("rollout_len", t.rollout_len);
    s.get("transformer_rollout_len", t.transformer_rollout_len);
    s.get("update_epochs", t.update_epochs);
    s.get("clip_eps", t.clip_eps);
    s.get("total_steps", t.total_steps);
    s.get("n_envs", t.n_envs);
    s.get("learning_rate", t.learning_rate);
    s.get("adam_epsilon", t.adam_epsilon);
    s.get("gae_lambda", t.gae_lambda);
    s.get("value_coef", t.value_coef);
    s.get("entropy_coef", t.entropy_coef);
    s.get("max_grad_norm", t.max_grad_norm);
    s.get("target_update", t.target_update);
    s.get("eps_start", t.eps_start);
    s.get("eps_end", t.eps_end);
    s.get("eps_fraction", t.eps_fraction);
    s.get("learning_starts", t.learning_starts);
    s.get("train_frequency", t.train_frequency);
    s.get("huber_delta", t.huber_delta);
    s.get("eta", t.eta);
    s.get("intrinsic_epochs", t.intrinsic_epochs);
    s.finish();
  }
  {
    Section s = root.sub("env");
    s.get("level_pool_size", c.env.level_pool_size);
    s.get("timeout", c.env.env.timeout);
    s.get("coin_reward", c.env.env.coin_reward);
    auto& d = c.env.env.difficulty;
    Section ds = s.sub("difficulty");
    ds.get("width", d.width);
    ds.get("min_height", d.min_height);
    ds.get("max_height", d.max_height);
    ds.get("max_step_up", d.max_step_up);
    ds.get("max_gaps", d.max_gaps);
    ds.get("max_gap_width", d.max_gap_width);
    ds.get("gap_probability", d.gap_probability);
    ds.get("jump_height", d.jump_height);
    ds.get("max_retries", d.max_retries);
    ds.finish();
    s.finish();
  }
  {
    Section s = root.sub("net");
    s.get("hidden", c.net.hidden);
    s.get("embed_dim", c.net.embed_dim);
    s.get("heads", c.net.heads);
    s.get("layers", c.net.layers);
    s.get("ffn_dim", c.net.ffn_dim);
    s.finish();
  }
  {
    Section s = root.sub("icm");
    s.get("beta", c.icm.beta);
    s.get("embedding", c.icm.embedding);
    s.get("hidden", c.icm.hidden);
    s.finish();
  }
  {
    Section s = root.sub("rnd");
    s.get("embedding", c.rnd.embedding);
    s.finish();
  }
  {
    Section s = root.sub("attribution");
    s.get("probe_frames", c.attribution.probe_frames);
    if (s.has("methods")) {
      c.attribution.methods.clear();
      for (const auto& m : s.raw("methods")) {
        try {
          c.attribution.methods.push_back(attribution::parse_method(m.get<std::string>()));
        } catch (const std::exception& e) {
          throw ConfigError(std::string("attribution.methods: ") + e.what());
        }
      }
    }
    s.get("lrp_epsilon", c.attribution.lrp_epsilon);
    s.get("gradcam_target", c.attribution.gradcam_target);
    s.finish();
  }
  {
    Section s = root.sub("vae");
    s.get("frames", c.vae.frames);
    s.get("epochs", c.vae.epochs);
    s.get("batch_size", c.vae.batch_size);
    s.get("learning_rate", c.vae.learning_rate);
    s.get("latent", c.vae.latent);
    s.get("reconstruction_frames", c.vae.reconstruction_frames);
    s.finish();
  }
  {
    Section s = root.sub("metrics");
    s.get("coverage_tau", c.metrics.coverage_tau);
    s.get("entropy_bins", c.metrics.entropy_bins);
    s.get("bin_restarts", c.metrics.bin_restarts);
    s.get("cluster_k", c.metrics.cluster_k);
    s.get("kmeans_restarts", c.metrics.kmeans_restarts);
    s.get("reference_frames", c.metrics.reference_frames);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(f, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["agents"] = nlohmann::ordered_json::array();
  for (auto a : c.agents) j["agents"].push_back(std::string(agents::agent_name(a)));
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir.string();
  const auto& t = c.training;
  j["training"] = {{"gamma", t.gamma},
                   {"buffer_size", t.buffer_size},
                   {"batch_size", t.batch_size},
                   {"minibatch_size", t.minibatch_size},
                   {"rollout_len", t.rollout_len},
                   {"transformer_rollout_len", t.transformer_rollout_len},
                   {"update_epochs", t.update_epochs},
                   {"clip_eps", t.clip_eps},
                   {"total_steps", t.total_steps},
                   {"n_envs", t.n_envs},
                   {"learning_rate", t.learning_rate},
                   {"adam_epsilon", t.adam_epsilon},
                   {"gae_lambda", t.gae_lambda},
                   {"value_coef", t.value_coef},
                   {"entropy_coef", t.entropy_coef},
                   {"max_grad_norm", t.max_grad_norm},
                   {"target_update", t.target_update},
                   {"eps_start", t.eps_start},
                   {"eps_end", t.eps_end},
                   {"eps_fraction", t.eps_fraction},
                   {"learning_starts", t.learning_starts},
                   {"train_frequency", t.train_frequency},
                   {"huber_delta", t.huber_delta},
                   {"eta", t.eta},
                   {"intrinsic_epochs", t.intrinsic_epochs}};
  const auto& d = c.env.env.difficulty;
  j["env"] = {{"level_pool_size", c.env.level_pool_size},
              {"timeout", c.env.env.timeout},
              {"coin_reward", c.env.env.coin_reward},
              {"difficulty",
               {{"width", d.width},
                {"min_height", d.min_height},
                {"max_height", d.max_height},
                {"max_step_up", d.max_step_up},
                {"max_gaps", d.max_gaps},
                {"max_gap_width", d.max_gap_width},
                {"gap_probability", d.gap_probability},
                {"jump_height", d.jump_height},
                {"max_retries", d.max_retries}}}};
  j["net"] = {{"hidden", c.net.hidden},
              {"embed_dim", c.net.embed_dim},
              {"heads", c.net.heads},
              {"layers", c.net.layers},
              {"ffn_dim", c.net.ffn_dim}};
  j["icm"] = {{"beta", c.icm.beta}, {"embedding", c.icm.embedding}, {"hidden", c.icm.hidden}};
  j["rnd"] = {{"embedding", c.rnd.embedding}};
  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (auto m : c.attribution.methods) methods.push_back(std::string(attribution::method_name(m)));
  j["attribution"] = {{"probe_frames", c.attribution.probe_frames},
                      {"methods", methods},
                      {"lrp_epsilon", c.attribution.lrp_epsilon},
                      {"gradcam_target", c.attribution.gradcam_target}};
  j["vae"] = {{"frames", c.vae.frames},
              {"epochs", c.vae.epochs},
              {"batch_size", c.vae.batch_size},
              {"learning_rate", c.vae.learning_rate},
              {"latent", c.vae.latent},
              {"reconstruction_frames", c.vae.reconstruction_frames}};
  j["metrics"] = {{"coverage_tau", c.metrics.coverage_tau},
                  {"entropy_bins", c.metrics.entropy_bins},
                  {"bin_restarts", c.metrics.bin_restarts},
                  {"cluster_k", c.metrics.cluster_k},
                  {"kmeans_restarts", c.metrics.kmeans_restarts},
                  {"reference_frames", c.metrics.reference_frames}};
  return j;
}

std::string config_hash(const RunConfig& config) {
  auto j = to_json(config);
  j.erase("output_dir");
  return hex64(fnv1a(j.dump()));
}

}  // namespace url_lens::pipeline
