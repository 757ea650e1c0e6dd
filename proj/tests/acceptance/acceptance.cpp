// Acceptance runner. One line per criterion:
//   [PASS] AC<n> <name>: <detail> (<seconds> s)
// `acceptance` runs everything; `acceptance 3 7` runs a subset.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "support/oracles.hpp"
#include "url_lens/agents/dqn.hpp"
#include "url_lens/agents/ppo.hpp"
#include "url_lens/agents/schedule.hpp"
#include "url_lens/attribution/gradcam.hpp"
#include "url_lens/attribution/lrp.hpp"
#include "url_lens/intrinsic/icm.hpp"
#include "url_lens/intrinsic/rnd.hpp"
#include "url_lens/latentlab/vae.hpp"
#include "url_lens/metrics/attention.hpp"
#include "url_lens/metrics/clustering.hpp"
#include "url_lens/metrics/exploration.hpp"
#include "url_lens/modelzoo/networks.hpp"
#include "url_lens/procenv/vec_runner.hpp"

namespace fs = std::filesystem;
using namespace url_lens;
using nn::Matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Matrix<double> random_matrix(Rng& rng, nn::Index rows, nn::Index cols, double lo, double hi) {
  Matrix<double> m(rows, cols);
  for (nn::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

metrics::Points to_points(const oracle::Rows& rows) {
  metrics::Points p(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t d = 0; d < rows[i].size(); ++d) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
  return p;
}

// ------------------------------------------------------------------- AC1

Outcome clustering_oracles() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const int k = rng.integer(2, 4);
    const int n = rng.integer(k + 1, 25);
    const int dim = rng.integer(1, 5);
    oracle::Rows x(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(dim)));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      // every cluster gets at least one point; raw labels are sparse on purpose
      labels[static_cast<std::size_t>(i)] = 7 * (i < k ? i : rng.integer(0, k - 1)) - 3;
      for (auto& v : x[static_cast<std::size_t>(i)]) v = rng.uniform(-5.0, 5.0) + labels[static_cast<std::size_t>(i)];
    }
    const auto p = to_points(x);
    worst = std::max({worst, std::abs(metrics::silhouette(p, labels) - oracle::silhouette(x, labels)),
                      std::abs(metrics::davies_bouldin(p, labels) - oracle::davies_bouldin(x, labels)),
                      std::abs(metrics::calinski_harabasz(p, labels) - oracle::calinski_harabasz(x, labels))});
  }
  const oracle::Rows x{{0.0}, {1.0}, {5.0}, {6.0}};
  const std::vector<int> labels{0, 0, 1, 1};
  const auto s = metrics::cluster_scores(to_points(x), labels);
  // (9/11 + 7/9) / 2, (0.5 + 0.5) / 5 and (25 / 1) / (1 / 2)
  const double want_s = (9.0 / 11.0 + 7.0 / 9.0) / 2.0;
  const bool closed = std::abs(s.silhouette - want_s) <= 1e-9 && std::abs(s.davies_bouldin - 0.2) <= 1e-9 &&
                      std::abs(s.calinski_harabasz - 50.0) <= 1e-9 && std::abs(want_s - 0.79798) < 5e-6;
  return {worst <= 1e-9 && closed, "30 instances max |diff| " + num(worst) + "; {0,1}/{5,6} -> " + num(s.silhouette) +
                                       " / " + num(s.davies_bouldin) + " / " + num(s.calinski_harabasz)};
}

// ------------------------------------------------------------------- AC2

Outcome lrp_conservation() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int side = rng.integer(5, 10), channels = rng.integer(1, 3);
    nn::Shape3 shape{side, side, channels};
    std::vector<std::unique_ptr<nn::Layer<double>>> owned;
    const int convs = rng.integer(1, 2);
    for (int c = 0; c < convs; ++c) {
      const int kernel = rng.integer(2, 3);
      if (shape.height < kernel) break;
      nn::ConvGeometry g{shape, rng.integer(2, 5), kernel, rng.integer(1, 2), 0};
      owned.push_back(std::make_unique<nn::Conv2d<double>>(g, false));
      shape = g.output();
      owned.push_back(std::make_unique<nn::ReLU<double>>(shape.size()));
    }
    nn::Index width = shape.size();
    const int hidden_layers = rng.integer(0, 2);
    for (int l = 0; l < hidden_layers; ++l) {
      const int out = rng.integer(4, 16);
      owned.push_back(std::make_unique<nn::Linear<double>>(width, out, 1, false));
      owned.push_back(std::make_unique<nn::ReLU<double>>(out));
      width = out;
    }
    const int classes = rng.integer(2, 6);
    owned.push_back(std::make_unique<nn::Linear<double>>(width, classes, 1, false));
    std::vector<nn::Layer<double>*> layers;
    for (auto& l : owned) {
      l->reset_parameters(rng);
      layers.push_back(l.get());
    }
    const auto input = random_matrix(rng, 1, side * side * channels, 0.0, 1.0);
    const int target = rng.integer(0, classes - 1);
    double score = 0.0;
    const auto r = attribution::lrp_through<double>(layers, input, target, 1e-9, &score);
    if (std::abs(score) < 1e-12) continue;
    worst = std::max(worst, std::abs(r.sum() - score) / std::abs(score));
  }
  return {worst <= 1e-4, "100 nets, max relative |sum R - f| " + num(worst)};
}

// ------------------------------------------------------------------- AC3

Outcome gradcam_closed_form() {
  // HWC layout: pixel (y, x) holds [A1, A2].
  const std::vector<double> act{1, 0, 0, 2, 0, 0, 1, 0};
  const std::vector<double> grad{0.5, -1, 0.5, -1, 0.5, -1, 0.5, -1};
  const auto map = attribution::max_normalize(attribution::grad_cam_coarse(act, grad, {2, 2, 2}));
  const std::vector<double> want{1, 0, 0, 1};
  double err = 0.0;
  for (std::size_t i = 0; i < 4; ++i) err = std::max(err, std::abs(map[i] - want[i]));
  return {err <= 1e-6, "map [[" + num(map[0]) + "," + num(map[1]) + "],[" + num(map[2]) + "," + num(map[3]) +
                           "]] max err " + num(err)};
}

// ------------------------------------------------------------------- AC4

std::vector<double*> flatten(const std::vector<nn::Parameter<double>*>& params) {
  std::vector<double*> out;
  for (auto* p : params)
    for (nn::Index i = 0; i < p->value.size(); ++i) out.push_back(p->value.data() + i);
  return out;
}

std::vector<double> grads(const std::vector<nn::Parameter<double>*>& params) {
  std::vector<double> out;
  for (auto* p : params)
    for (nn::Index i = 0; i < p->grad.size(); ++i) out.push_back(p->grad.data()[i]);
  return out;
}

struct Check {
  std::string name;
  std::size_t params = 0;
  double error = 0.0;
};

Check grad_check(const std::string& name, const std::vector<nn::Parameter<double>*>& params,
                 const std::function<double()>& loss_with_backward) {
  nn::zero_grad(params);
  loss_with_backward();
  const auto analytic = grads(params);
  const auto numeric = oracle::central_difference(flatten(params), loss_with_backward);
  return {name, analytic.size(), oracle::relative_error(analytic, numeric)};
}

modelzoo::NetConfig tiny_net() {
  modelzoo::NetConfig c;
  c.encoder.input = {6, 6, 2};
  c.encoder.stages = {{3, 3, 1, 0}};
  c.hidden = 8;
  c.embed_dim = 4;
  c.heads = 2;
  c.layers = 1;
  c.ffn_dim = 6;
  return c;
}

Outcome gradient_checks() {
  Rng rng(404);
  std::vector<Check> checks;
  const auto net_cfg = tiny_net();
  const int batch = 5, in = net_cfg.encoder.input.size();

  {
    modelzoo::QNetwork<double> online(net_cfg, rng), target(net_cfg, rng);
    agents::DqnBatch<double> b;
    b.obs = random_matrix(rng, batch, in, 0, 1);
    b.next_obs = random_matrix(rng, batch, in, 0, 1);
    for (int i = 0; i < batch; ++i) {
      b.actions.push_back(rng.integer(0, procenv::kNumActions - 1));
      b.rewards.push_back(rng.uniform(-2, 2));
      b.dones.push_back(i == 2);
    }
    // small delta so both Huber branches are exercised
    checks.push_back(grad_check("dqn_update", online.parameters(),
                                [&] { return agents::dqn_loss_and_backward(online, target, b, 0.99, 0.05); }));
  }

  auto ppo_check = [&](const std::string& name, modelzoo::ActorCritic<double>& net) {
    agents::PpoBatch<double> b;
    b.obs = random_matrix(rng, batch, in, 0, 1);
    const auto logp = modelzoo::log_softmax_rows<double>(net.forward_policy(b.obs).logits);
    for (int i = 0; i < batch; ++i) {
      b.actions.push_back(rng.integer(0, procenv::kNumActions - 1));
      // old policy a little off so some ratios clip and some do not
      b.old_log_probs.push_back(logp(i, b.actions.back()) + (i % 2 ? 0.5 : 0.01));
      b.advantages.push_back(rng.uniform(-1, 1));
      b.returns.push_back(rng.uniform(-1, 1));
    }
    agents::PpoCoefficients coef;
    checks.push_back(grad_check(name, net.parameters(), [&] { return agents::ppo_loss_and_backward(net, b, coef).total; }));
  };
  {
    modelzoo::ActorCritic<double> net(net_cfg, rng);
    ppo_check("ppo_update", net);
    modelzoo::TransformerPolicy<double> tnet(net_cfg, rng);
    ppo_check("ppo_update(transformer)", tnet);
  }

  {
    intrinsic::IcmConfig cfg;
    cfg.encoder = net_cfg.encoder;
    cfg.embedding = 6;
    cfg.hidden = 8;
    intrinsic::IcmModule<double> icm(cfg, rng);
    const auto obs = random_matrix(rng, batch, in, 0, 1), next = random_matrix(rng, batch, in, 0, 1);
    std::vector<int> actions;
    for (int i = 0; i < batch; ++i) actions.push_back(rng.integer(0, procenv::kNumActions - 1));
    // the forward-model target phi(s') is a stop-gradient constant
    const Matrix<double> fixed = icm.embed(next);
    checks.push_back(grad_check("icm_loss", icm.parameters(),
                                [&] { return icm.loss_and_backward(obs, actions, next, &fixed).total; }));
  }

  {
    latentlab::VaeConfig cfg;
    cfg.input = {8, 8, 2};
    cfg.channels = {2, 3, 3};
    cfg.latent = 3;
    latentlab::Vae<double> vae(cfg, rng);
    const auto x = random_matrix(rng, 3, cfg.input.size(), 0, 1);
    Matrix<double> noise(3, cfg.latent);
    for (nn::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();
    checks.push_back(grad_check("vae_loss", vae.parameters(), [&] { return vae.loss(x, noise, true).total; }));
  }

  bool ok = true;
  std::string detail;
  for (const auto& c : checks) {
    ok &= c.params <= 1000 && c.error <= 1e-5;
    detail += (detail.empty() ? "" : "; ") + c.name + " (" + std::to_string(c.params) + " params) " + num(c.error);
  }
  return {ok, detail};
}

// ------------------------------------------------------------------- AC5

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome rnd_decay() {
  Rng rng(505);
  procenv::RunnerConfig rc;
  rc.n_envs = 8;
  procenv::VecRunner runner(rc);
  std::vector<procenv::Observation> trained;
  while (trained.size() < 256) {
    std::vector<int> actions(8);
    for (auto& a : actions) a = static_cast<int>(rng.index(procenv::kNumActions));
    runner.step(actions);
    for (const auto& o : runner.observations()) trained.push_back(o);
  }
  trained.resize(256);
  // Novel frames: levels outside the training pool, a few random steps in.
  std::vector<procenv::Observation> novel;
  for (auto seed : procenv::held_out_seeds(rc.seed, 256)) {
    auto state = procenv::reset(procenv::generate_level(seed));
    for (int t = rng.integer(0, 12); t > 0; --t) {
      auto next = procenv::step(state, static_cast<procenv::Action>(rng.index(procenv::kNumActions)));
      if (next.done) break;
      state = next.state;
    }
    novel.push_back(procenv::render(state));
  }
  const auto x = modelzoo::observations_to_input<float>(trained), h = modelzoo::observations_to_input<float>(novel);
  intrinsic::RndModule<float> rnd({}, rng);
  nn::AdamOptions opt;
  opt.epsilon = 1e-5;
  nn::Adam<float> adam(rnd.predictor_parameters(), opt);
  const double initial = mean(rnd.rewards(x));
  for (int i = 0; i < 1000; ++i) intrinsic::rnd_update(rnd, adam, x);
  const double after = mean(rnd.rewards(x)), held = mean(rnd.rewards(h));
  const double decay = after / initial, ratio = held / after;
  return {decay <= 0.1 && ratio >= 3.0, "trained-batch reward " + num(initial) + " -> " + num(after) + " (" +
                                            num(100 * decay) + "% of initial); held-out/trained " + num(ratio)};
}

// ------------------------------------------------------------------- AC7

Outcome metric_ranges() {
  Rng rng(707);
  int violations = 0;
  auto in01 = [&](double v) {
    if (!(v >= 0.0 && v <= 1.0)) ++violations;
  };
  auto random_map = [&](int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    const int mode = rng.integer(0, 3);
    for (auto& x : v) {
      x = rng.uniform();
      if (mode == 1 && rng.bernoulli(0.8)) x = 0.0;      // sparse
      if (mode == 2) x = x < 0.5 ? -x : x * 1e6;         // signed, wide range
      if (mode == 3) x = 0.0;                             // empty
    }
    return v;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const int hgt = rng.integer(1, 40), wid = rng.integer(1, 40);
    const auto p = random_map(hgt * wid), q = random_map(hgt * wid);
    in01(metrics::attention_diversity(p));
    in01(metrics::attention_change_rate(p, q));
    in01(metrics::attention_spread(p, hgt, wid));

    const int k = rng.integer(2, 6), n = rng.integer(k, 40), dim = rng.integer(1, 6);
    metrics::Points pts(n, dim);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.bernoulli(0.1) ? 0.0 : rng.normal();
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < 2 ? i : rng.integer(0, k - 1);
    const double s = metrics::silhouette(pts, labels);
    if (!(s >= -1.0 && s <= 1.0)) ++violations;

    const int bins = rng.integer(1, 300);
    std::vector<int> traj(static_cast<std::size_t>(rng.integer(1, 2000)));
    const bool uniform = rng.bernoulli(0.2);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      traj[i] = uniform ? static_cast<int>(i % static_cast<std::size_t>(bins)) : rng.integer(0, bins - 1);
    }
    const double e = metrics::trajectory_entropy(traj, bins);
    if (!(e >= 0.0 && e <= std::log(static_cast<double>(bins)))) ++violations;
  }
  return {violations == 0, "1000 trials, " + std::to_string(violations) + " out-of-range values"};
}

// ------------------------------------------------------------------- AC8

Outcome checkpoint_schedule() {
  const auto s = agents::checkpoint_schedule(1'000'000);
  const std::vector<long> want{0, 100000, 500000, 800000, 995000};
  std::string got;
  for (long v : s) got += (got.empty() ? "" : ",") + std::to_string(v);
  return {s == want, "{" + got + "}"};
}

// ------------------------------------------------------------ pipeline runs

int run_cli(const std::string& subcommand, const fs::path& config, const fs::path& out, bool deterministic) {
  std::string cmd;
  if (deterministic) cmd += "URL_LENS_DETERMINISTIC=1 ";
  cmd += std::string("\"") + URL_LENS_CLI + "\" " + subcommand + " --config \"" + config.string() + "\" --out \"" +
         out.string() + "\"";
  const fs::path log = out.string() + ".log";
  fs::create_directories(out.parent_path());
  cmd += " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

const fs::path kConfigs = URL_LENS_CONFIG_DIR;
const fs::path kRuns = URL_LENS_RUN_DIR;

Outcome desk_ordering() {
  const fs::path out = kRuns / "desk";
  const int rc = run_cli("all", kConfigs / "desk.json", out, false);
  if (rc != 0) return {false, "url-lens all exited " + std::to_string(rc) + " (see " + out.string() + ".log)"};
  const auto report = nlohmann::json::parse(slurp(out / "report" / "metrics.json"));
  auto med = [&](const std::string& agent, const std::string& key) {
    const auto& v = report["agents"][agent][key]["median"];
    return v.is_number() ? v.get<double>() : std::nan("");
  };
  // A rerun reuses fresh stages, so the budget also applies to the recorded stage times.
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  double recorded = 0.0;
  for (const auto& [key, rec] : manifest["stages"].items()) recorded += rec.value("wall_clock_s", 0.0);
  const double dqn_h = med("dqn", "trajectory_entropy"), dqn_c = med("dqn", "coverage_pct");
  bool ok = std::isfinite(dqn_h) && std::isfinite(dqn_c) && recorded <= 3 * 3600;
  std::string detail = "recorded stage time " + num(recorded) + " s" + (recorded <= 3 * 3600 ? "" : " (over budget)") +
                       "; median entropy/coverage DQN " + num(dqn_h) + "/" + num(dqn_c);
  for (const std::string agent : {"icm", "rnd", "transformer_rnd"}) {
    const double h = med(agent, "trajectory_entropy"), c = med(agent, "coverage_pct");
    const bool beat = h > dqn_h && c > dqn_c;
    ok &= beat;
    detail += ", " + agent + " " + num(h) + "/" + num(c) + (beat ? "" : " (not above DQN)");
  }
  return {ok, detail};
}

Outcome determinism() {
  const fs::path a = kRuns / "determinism_a", b = kRuns / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const int ra = run_cli("all", kConfigs / "tiny.json", a, true);
  const int rb = run_cli("all", kConfigs / "tiny.json", b, true);
  if (ra != 0 || rb != 0) return {false, "exit codes " + std::to_string(ra) + ", " + std::to_string(rb)};
  int same = 0, files = 0;
  for (const auto& rel : {fs::path("report/metrics.json"), fs::path("seed_0/metrics/metrics.json")}) {
    ++files;
    const auto x = slurp(a / rel), y = slurp(b / rel);
    same += !x.empty() && x == y;
  }
  return {same == files, std::to_string(same) + "/" + std::to_string(files) + " metrics.json files byte-identical"};
}

Outcome tiny_smoke() {
  const fs::path out = kRuns / "tiny";
  fs::remove_all(out);
  const int rc = run_cli("all", kConfigs / "tiny.json", out, false);
  if (rc != 0) return {false, "url-lens all exited " + std::to_string(rc)};
  const fs::path r = out / "report";
  std::vector<fs::path> bundle{r / "metrics.json", r / "table1.csv", r / "rewards_seed0.png", r / "reconstructions.png",
                               r / "attention_over_training.png"};
  for (const std::string agent : {"dqn", "rnd"}) {
    bundle.push_back(r / ("saliency_" + agent + "_gradcam.png"));
    bundle.push_back(r / ("saliency_" + agent + "_lrp.png"));
    bundle.push_back(r / ("projection_" + agent + ".png"));
  }
  int missing = 0;
  std::string first;
  for (const auto& p : bundle) {
    if (!fs::exists(p) || fs::file_size(p) == 0) {
      if (!missing++) first = p.filename().string();
    }
  }
  return {missing == 0, std::to_string(bundle.size() - static_cast<std::size_t>(missing)) + "/" +
                            std::to_string(bundle.size()) + " report files" + (missing ? ", first missing " + first : "")};
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "clustering oracles", 10, clustering_oracles},
      {2, "LRP conservation", 60, lrp_conservation},
      {3, "Grad-CAM closed form", 1, gradcam_closed_form},
      {4, "gradient checks", 300, gradient_checks},
      {5, "RND novelty decay", 300, rnd_decay},
      {6, "desk-scale ordering", 3 * 3600, desk_ordering},
      {7, "metric ranges", 30, metric_ranges},
      {8, "checkpoint schedule", 1, checkpoint_schedule},
      {9, "determinism", 3600, determinism},
      {10, "tiny end-to-end", 1800, tiny_smoke},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + num(c.budget_s) + " s budget";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "AC" << c.id << ' ' << c.name << ": " << o.detail << " ("
              << num(secs) << " s)" << std::endl;
  }
  return failed ? 1 : 0;
}
