#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "url_lens/agents/trainer.hpp"
#include "url_lens/attribution/attribute.hpp"
#include "url_lens/attribution/gradcam.hpp"
#include "url_lens/attribution/lrp.hpp"
#include "url_lens/modelzoo/checkpoint.hpp"
#include "url_lens/procenv/vec_runner.hpp"

using namespace url_lens;
using namespace url_lens::attribution;
using nn::Matrix;

TEST_CASE("bilinear upsampling uses half-pixel centres") {
  // f(y, x) = x + 2y on the 2x2 grid; samples sit at -0.25, 0.25, 0.75, 1.25 (clamped)
  const std::vector<double> src{0, 1, 2, 3};
  const auto up = upsample_bilinear(src, 2, 2, 4, 4);
  const double pos[4] = {0.0, 0.25, 0.75, 1.0};
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(up[static_cast<std::size_t>(y * 4 + x)] == doctest::Approx(pos[x] + 2 * pos[y]));
  const auto flat = upsample_bilinear(std::vector<double>(16, 0.7), 4, 4, 64, 64);
  for (double v : flat) CHECK(v == doctest::Approx(0.7));
}

TEST_CASE("max normalization clamps negatives and keeps zero maps zero") {
  const auto n = max_normalize(std::vector<double>{-1, 2, 4});
  CHECK(n == std::vector<double>{0, 0.5, 1});
  CHECK(max_normalize(std::vector<double>{-1, -2}) == std::vector<double>{0, 0});
  SaliencyMap bad{1, 2, {0.5, 0.4}};
  CHECK_THROWS_AS(check_saliency(bad), std::logic_error);
}

TEST_CASE("coarse Grad-CAM weights channels by their mean gradient") {
  // one channel, 1x2: alpha = mean(1, 3) = 2
  CHECK(grad_cam_coarse(std::vector<double>{1, -1}, std::vector<double>{1, 3}, {1, 2, 1}) == std::vector<double>{2, 0});
}

TEST_CASE("LRP stops at layers without a rule") {
  nn::Linear<double> l(3, 2, 1, false);
  nn::Tanh<double> t(2);
  nn::Linear<double> h(2, 2, 1, false);
  Rng rng(1);
  l.reset_parameters(rng);
  h.reset_parameters(rng);
  std::vector<nn::Layer<double>*> layers{&l, &t, &h};
  CHECK_THROWS_AS(lrp_through<double>(layers, Matrix<double>::Ones(1, 3), 0, 1e-9), nn::UnsupportedLayerError);
}

TEST_CASE("LRP on a bias-free MLP conserves the target score") {
  Rng rng(2);
  nn::Linear<double> a(6, 5, 1, false), b(5, 3, 1, false);
  nn::ReLU<double> r(5);
  a.reset_parameters(rng);
  b.reset_parameters(rng);
  std::vector<nn::Layer<double>*> layers{&a, &r, &b};
  Matrix<double> x(1, 6);
  x << 0.1, 0.9, 0.3, 0.5, 0.7, 0.2;
  for (int target = 0; target < 3; ++target) {
    double score = 0.0;
    const auto rel = lrp_through<double>(layers, x, target, 1e-9, &score);
    CHECK(rel.sum() == doctest::Approx(score).epsilon(1e-6));
  }
  CHECK_THROWS_AS(lrp_through<double>(layers, x, 3, 1e-9), std::out_of_range);
}

TEST_CASE("probe sets are fixed held-out frames") {
  const auto a = make_probe_set(3, 6), b = make_probe_set(3, 6);
  CHECK(a.size() == 6);
  CHECK(a.frames == b.frames);
  CHECK(a.level_seeds == procenv::held_out_seeds(3, 6));
}

TEST_CASE("checkpoint attribution writes readable maps for both methods") {
  const auto dir = std::filesystem::temp_directory_path() / "url_lens_attr_test";
  std::filesystem::remove_all(dir);
  modelzoo::NetConfig cfg;
  cfg.hidden = 16;
  for (auto kind : {agents::AgentKind::dqn, agents::AgentKind::transformer_rnd}) {
    cfg.embed_dim = 8;
    cfg.heads = 2;
    cfg.layers = 1;
    cfg.ffn_dim = 8;
    Rng rng(3);
    auto net = agents::make_network<float>(kind, cfg, rng);
    const std::string name(agents::agent_name(kind));
    modelzoo::save_checkpoint<float>(dir, {name, 100, "h", 0}, net->parameters());
    const auto probe = make_probe_set(0, 3);
    AttributionRequest req;
    req.checkpoint = modelzoo::checkpoint_path(dir, name, 100);
    req.kind = kind;
    req.net = cfg;
    req.agent = name;
    req.step = 100;
    const auto out = attribute_checkpoint(req, probe);
    REQUIRE(out.maps.size() == 6);
    CHECK(out.lrp_signed.size() == 3);
    write_attribution(dir / name, out, probe, "h");
    for (const auto& m : out.maps) {
      CHECK(m.height == 64);
      check_saliency(m);
      const auto back = read_saliency_csv(saliency_csv_path(dir / name, m.method, 100, m.frame_id));
      CHECK(back.method == m.method);
      CHECK(back.frame_id == m.frame_id);
      for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(back.values[i] == m.values[i]);
    }
  }
  AttributionRequest missing;
  missing.checkpoint = dir / "nope.bin";
  CHECK_THROWS_AS(attribute_checkpoint(missing, make_probe_set(0, 1)), std::runtime_error);
  std::filesystem::remove_all(dir);
}
