#include <filesystem>

#include "doctest.h"
#include "support/oracles.hpp"
#include "url_lens/modelzoo/checkpoint.hpp"
#include "url_lens/modelzoo/networks.hpp"

using namespace url_lens;
using namespace url_lens::modelzoo;
using nn::Matrix;

TEST_CASE("the default encoder ends in a 4x4x64 map") {
  CHECK(encoder_output_shape(EncoderConfig{}) == nn::Shape3{4, 4, 64});
}

TEST_CASE("observations become [0,1] rows in HWC order") {
  procenv::Observation o;
  o.pixels[0] = 255;
  o.pixels[5] = 51;
  const auto x = observation_to_input<double>(o);
  CHECK(x.cols() == 64 * 64 * 3);
  CHECK(x(0, 0) == 1.0);
  CHECK(x(0, 5) == doctest::Approx(0.2));
}

TEST_CASE("softmax rows are distributions and log-softmax agrees") {
  Matrix<double> l(2, 3);
  l << 1000, 1001, 999, -3, 0, 2;
  const auto p = softmax_rows<double>(l);
  const auto lp = log_softmax_rows<double>(l);
  for (int i = 0; i < 2; ++i) {
    CHECK(p.row(i).sum() == doctest::Approx(1.0));
    for (int j = 0; j < 3; ++j) CHECK(std::log(p(i, j)) == doctest::Approx(lp(i, j)));
  }
}

namespace {

NetConfig tiny() {
  NetConfig c;
  c.encoder.input = {6, 6, 2};
  c.encoder.stages = {{3, 3, 1, 0}};
  c.hidden = 5;
  c.embed_dim = 4;
  c.heads = 2;
  c.layers = 2;
  c.ffn_dim = 6;
  return c;
}

// d(score_target)/d(feature map) by perturbing the features directly.
void check_feature_gradient(AttributableNet<double>& net, std::function<Matrix<double>(const Matrix<double>&)> head) {
  Rng rng(7);
  Matrix<double> x(1, net.input_shape().size());
  for (nn::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  const auto scores = net.scores(x);
  Matrix<double> onehot = Matrix<double>::Zero(1, scores.cols());
  onehot(0, 1) = 1.0;
  Matrix<double> features = net.feature_map();
  const auto g = net.feature_gradient(onehot);
  std::vector<double*> theta;
  for (nn::Index i = 0; i < features.size(); ++i) theta.push_back(features.data() + i);
  const auto numeric = oracle::central_difference(theta, [&] { return head(features)(0, 1); });
  std::vector<double> analytic(g.data(), g.data() + g.size());
  CHECK(oracle::relative_error(analytic, numeric) < 1e-7);
}

}  // namespace

TEST_CASE("feature gradients match finite differences through each head") {
  Rng rng(8);
  SUBCASE("actor-critic") {
    ActorCritic<double> net(tiny(), rng);
    check_feature_gradient(net, [&](const Matrix<double>& f) { return net.forward_from_features(f).logits; });
  }
  SUBCASE("transformer policy") {
    TransformerPolicy<double> net(tiny(), rng);
    check_feature_gradient(net, [&](const Matrix<double>& f) { return net.forward_from_features(f).logits; });
  }
}

TEST_CASE("transformer attention maps are row-stochastic") {
  Rng rng(9);
  TransformerPolicy<double> net(tiny(), rng);
  Matrix<double> x = Matrix<double>::Constant(1, net.input_shape().size(), 0.5);
  const auto maps = net.attention_maps(x);
  CHECK(maps.size() == 2);
  for (const auto& layer : maps) {
    CHECK(layer.size() == 2);
    for (const auto& m : layer) {
      CHECK(m.rows() == net.token_count());
      for (int r = 0; r < m.rows(); ++r) CHECK(m.row(r).sum() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("checkpoints round-trip with their sidecar") {
  Rng rng(10);
  const auto dir = std::filesystem::temp_directory_path() / "url_lens_ckpt_test";
  std::filesystem::remove_all(dir);
  QNetwork<float> a(tiny(), rng), b(tiny(), rng);
  const auto path = save_checkpoint<float>(dir, {"dqn", 500, "abc", nn::parameter_count(a.parameters())}, a.parameters());
  CHECK(path == checkpoint_path(dir, "dqn", 500));
  const auto info = load_checkpoint<float>(path, b.parameters());
  CHECK(info.agent == "dqn");
  CHECK(info.step == 500);
  CHECK(info.config_hash == "abc");
  CHECK(a.parameters()[0]->value == b.parameters()[0]->value);
  // float checkpoint into a double network
  QNetwork<double> d(tiny(), rng);
  load_checkpoint<double>(path, d.parameters());
  CHECK(d.parameters()[2]->value(0, 0) == static_cast<double>(a.parameters()[2]->value(0, 0)));
  CHECK_THROWS_AS(load_checkpoint<float>(checkpoint_path(dir, "dqn", 1), b.parameters()), std::runtime_error);
  std::filesystem::remove_all(dir);
}
