#include <cmath>

#include "doctest.h"
#include "url_lens/intrinsic/icm.hpp"
#include "url_lens/intrinsic/rnd.hpp"
#include "url_lens/intrinsic/running_stats.hpp"

using namespace url_lens;
using namespace url_lens::intrinsic;
using nn::Matrix;

namespace {

modelzoo::EncoderConfig small_encoder() {
  modelzoo::EncoderConfig e;
  e.input = {8, 8, 3};
  e.stages = {{4, 3, 1, 0}, {4, 3, 2, 0}};
  return e;
}

Matrix<double> random_obs(Rng& rng, int n, int size) {
  Matrix<double> m(n, size);
  for (nn::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

}  // namespace

TEST_CASE("running mean/std matches a two-pass computation over all data") {
  Rng rng(1);
  RunningMeanStd rms;
  std::vector<double> all;
  for (int b = 0; b < 6; ++b) {
    std::vector<double> batch(static_cast<std::size_t>(rng.integer(1, 20)));
    for (auto& v : batch) v = rng.normal() * 3 + 7;
    rms.update(batch);
    all.insert(all.end(), batch.begin(), batch.end());
  }
  double mean = 0.0, var = 0.0;
  for (double v : all) mean += v / static_cast<double>(all.size());
  for (double v : all) var += (v - mean) * (v - mean) / static_cast<double>(all.size());
  // the 1e-4 pseudo-count prior shifts the result by about 1e-4 / n
  CHECK(rms.mean() == doctest::Approx(mean).epsilon(1e-4));
  CHECK(rms.variance() == doctest::Approx(var).epsilon(1e-4));
}

TEST_CASE("RND reward is the squared distillation error") {
  Rng rng(2);
  RndConfig cfg;
  cfg.encoder = small_encoder();
  cfg.embedding = 5;
  RndModule<double> rnd(cfg, rng);
  const auto x = random_obs(rng, 3, cfg.encoder.input.size());
  const auto r = rnd.rewards(x);
  const Matrix<double> d = rnd.predictor_embedding(x) - rnd.target_embedding(x);
  for (int i = 0; i < 3; ++i) CHECK(r[static_cast<std::size_t>(i)] == doctest::Approx(d.row(i).squaredNorm()));
  rnd.copy_target_into_predictor();
  for (double v : rnd.rewards(x)) CHECK(v == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("RND updates train the predictor and leave the target frozen") {
  Rng rng(3);
  RndConfig cfg;
  cfg.encoder = small_encoder();
  cfg.embedding = 5;
  RndModule<double> rnd(cfg, rng);
  const auto x = random_obs(rng, 16, cfg.encoder.input.size());
  nn::AdamOptions o;
  o.learning_rate = 1e-3;
  nn::Adam<double> adam(rnd.predictor_parameters(), o);
  const auto hash = rnd.target_hash();
  const double first = rnd_update(rnd, adam, x);
  double last = first;
  for (int i = 0; i < 200; ++i) last = rnd_update(rnd, adam, x);
  CHECK(last < 0.2 * first);
  CHECK(rnd.target_hash() == hash);
}

TEST_CASE("ICM reward is half beta times the forward-model error") {
  Rng rng(4);
  IcmConfig cfg;
  cfg.encoder = small_encoder();
  cfg.embedding = 6;
  cfg.hidden = 7;
  cfg.beta = 0.2;
  IcmModule<double> icm(cfg, rng);
  const auto s = random_obs(rng, 4, cfg.encoder.input.size()), s2 = random_obs(rng, 4, cfg.encoder.input.size());
  const std::vector<int> a{0, 3, 5, 1};
  const auto r = icm.rewards(s, a, s2);
  const Matrix<double> pred = icm.predict_next(icm.embed(s), a);
  const Matrix<double> target = icm.embed(s2);
  for (int i = 0; i < 4; ++i) {
    CHECK(r[static_cast<std::size_t>(i)] == doctest::Approx(0.1 * (pred.row(i) - target.row(i)).squaredNorm()));
  }
}

TEST_CASE("ICM loss combines inverse cross-entropy and the weighted forward error") {
  Rng rng(5);
  IcmConfig cfg;
  cfg.encoder = small_encoder();
  cfg.embedding = 6;
  cfg.hidden = 7;
  IcmModule<double> icm(cfg, rng);
  const auto s = random_obs(rng, 3, cfg.encoder.input.size()), s2 = random_obs(rng, 3, cfg.encoder.input.size());
  const std::vector<int> a{2, 4, 0};
  const Matrix<double> phi = icm.embed(s), phi2 = icm.embed(s2);
  const Matrix<double> logits = icm.inverse_logits(phi, phi2);
  const Matrix<double> pred = icm.predict_next(phi, a);
  double ce = 0.0, fwd = 0.0;
  for (int i = 0; i < 3; ++i) {
    double z = 0.0;
    for (int j = 0; j < logits.cols(); ++j) z += std::exp(logits(i, j));
    ce += (std::log(z) - logits(i, a[static_cast<std::size_t>(i)])) / 3;
    fwd += 0.5 * (pred.row(i) - phi2.row(i)).squaredNorm() / 3;
  }
  const auto l = icm.loss_and_backward(s, a, s2);
  CHECK(l.inverse == doctest::Approx(ce));
  CHECK(l.forward == doctest::Approx(fwd));
  CHECK(l.total == doctest::Approx(ce + cfg.beta * fwd));
}
