#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "support/oracles.hpp"
#include "url_lens/nn/adam.hpp"
#include "url_lens/nn/attention.hpp"
#include "url_lens/nn/layers.hpp"
#include "url_lens/nn/serialize.hpp"

using namespace url_lens;
using namespace url_lens::nn;

namespace {

Matrix<double> random_matrix(Rng& rng, Index r, Index c, double lo = -1, double hi = 1) {
  Matrix<double> m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

// Direct-loop convolution over HWC input, weights out x (ky, kx, c).
Matrix<double> naive_conv(const Matrix<double>& x, const Matrix<double>& w, const Matrix<double>& b, ConvGeometry g) {
  const auto o = g.output();
  Matrix<double> y = Matrix<double>::Zero(x.rows(), o.size());
  for (Index n = 0; n < x.rows(); ++n)
    for (int oy = 0; oy < o.height; ++oy)
      for (int ox = 0; ox < o.width; ++ox)
        for (int oc = 0; oc < o.channels; ++oc) {
          double s = b.size() ? b(0, oc) : 0.0;
          for (int ky = 0; ky < g.kernel; ++ky)
            for (int kx = 0; kx < g.kernel; ++kx)
              for (int c = 0; c < g.input.channels; ++c) {
                const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || ix < 0 || iy >= g.input.height || ix >= g.input.width) continue;
                s += x(n, (iy * g.input.width + ix) * g.input.channels + c) *
                     w(oc, (ky * g.kernel + kx) * g.input.channels + c);
              }
          y(n, (oy * o.width + ox) * o.channels + oc) = s;
        }
  return y;
}

// Checks parameter and input gradients of sum(out * probe) against central differences.
void check_layer_gradients(Layer<double>& layer, Matrix<double> x, Rng& rng, double tol = 1e-6) {
  const Matrix<double> probe = random_matrix(rng, x.rows(), layer.output_size());
  auto loss = [&] { return layer.forward(x).cwiseProduct(probe).sum(); };
  auto params = layer.parameters();
  zero_grad(params);
  layer.forward(x);
  const Matrix<double> dx = layer.backward(probe);
  std::vector<double> analytic, numeric;
  std::vector<double*> theta;
  for (auto* p : params)
    for (Index i = 0; i < p->value.size(); ++i) {
      analytic.push_back(p->grad.data()[i]);
      theta.push_back(p->value.data() + i);
    }
  for (Index i = 0; i < x.size(); ++i) {
    analytic.push_back(dx.data()[i]);
    theta.push_back(x.data() + i);
  }
  numeric = oracle::central_difference(theta, loss);
  CHECK(oracle::relative_error(analytic, numeric) < tol);
}

}  // namespace

TEST_CASE("conv2d forward matches direct loops") {
  Rng rng(1);
  for (ConvGeometry g : {ConvGeometry{{7, 6, 2}, 3, 3, 1, 0}, ConvGeometry{{8, 8, 3}, 4, 4, 2, 1},
                         ConvGeometry{{9, 9, 1}, 2, 3, 2, 1}}) {
    Conv2d<double> conv(g);
    conv.reset_parameters(rng);
    conv.bias().value = random_matrix(rng, 1, g.out_channels);
    const auto x = random_matrix(rng, 2, g.input.size());
    const auto want = naive_conv(x, conv.weight().value, conv.bias().value, g);
    CHECK((conv.forward(x) - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("layer gradients match central differences") {
  Rng rng(2);
  SUBCASE("linear") {
    Linear<double> l(5, 3, 2);
    l.reset_parameters(rng);
    check_layer_gradients(l, random_matrix(rng, 3, 10), rng);
  }
  SUBCASE("conv2d with padding and stride") {
    Conv2d<double> c(ConvGeometry{{6, 5, 2}, 3, 3, 2, 1});
    c.reset_parameters(rng);
    check_layer_gradients(c, random_matrix(rng, 2, 60), rng);
  }
  SUBCASE("transposed conv") {
    ConvTranspose2d<double> t({3, 3, 2}, 2, 4, 2, 1);
    t.reset_parameters(rng);
    check_layer_gradients(t, random_matrix(rng, 2, 18), rng);
  }
  SUBCASE("layer norm") {
    LayerNorm<double> n(4, 3);
    n.reset_parameters(rng);
    n.parameters()[0]->value = random_matrix(rng, 1, 4);
    check_layer_gradients(n, random_matrix(rng, 2, 12), rng);
  }
  SUBCASE("self-attention") {
    MultiHeadSelfAttention<double> a(4, 2, 3);
    a.reset_parameters(rng);
    check_layer_gradients(a, random_matrix(rng, 2, 12), rng);
  }
  SUBCASE("transformer encoder layer") {
    TransformerEncoderLayer<double> e(4, 2, 3, 6);
    e.reset_parameters(rng);
    check_layer_gradients(e, random_matrix(rng, 2, 12), rng);
  }
  SUBCASE("positional embedding and token mean") {
    PositionalEmbedding<double> p(3, 2);
    p.reset_parameters(rng);
    check_layer_gradients(p, random_matrix(rng, 2, 6), rng);
    TokenMean<double> m(3, 2);
    check_layer_gradients(m, random_matrix(rng, 2, 6), rng);
  }
}

TEST_CASE("transposed conv is the adjoint of the matching conv") {
  Rng rng(3);
  const Shape3 small{3, 3, 4}, big{6, 6, 2};
  ConvTranspose2d<double> up(small, 2, 4, 2, 1);
  up.reset_parameters(rng);
  CHECK(up.output_shape() == big);
  Conv2d<double> down(ConvGeometry{big, 4, 4, 2, 1}, false);
  down.weight().value = up.parameters()[0]->value;
  up.parameters()[1]->value.setZero();
  const auto x = random_matrix(rng, 1, small.size()), y = random_matrix(rng, 1, big.size());
  const double lhs = up.forward(x).cwiseProduct(y).sum();
  const double rhs = down.forward(y).cwiseProduct(x).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("epsilon rule on a two-input linear unit") {
  Linear<double> l(2, 1, 1, false);
  l.weight().value << 2.0, -1.0;
  Matrix<double> x(1, 2);
  x << 3.0, 4.0;
  l.forward(x);  // z = 6 - 4 = 2
  Matrix<double> r(1, 1);
  r << 1.0;
  const auto rin = l.relevance(r, 0.5);
  // R_i = x_i w_i / (z + eps * sign z)
  CHECK(rin(0, 0) == doctest::Approx(6.0 / 2.5));
  CHECK(rin(0, 1) == doctest::Approx(-4.0 / 2.5));
}

TEST_CASE("layers without a relevance rule say so") {
  Tanh<double> t(3);
  t.forward(Matrix<double>::Zero(1, 3));
  CHECK_THROWS_AS(t.relevance(Matrix<double>::Ones(1, 3), 1e-9), UnsupportedLayerError);
  try {
    t.relevance(Matrix<double>::Ones(1, 3), 1e-9);
  } catch (const UnsupportedLayerError& e) {
    CHECK(e.kind() == "tanh");
  }
}

TEST_CASE("adam follows the bias-corrected update") {
  Parameter<double> p("w", 1, 2);
  p.value << 1.0, -2.0;
  AdamOptions o;
  o.learning_rate = 0.1;
  o.epsilon = 1e-8;
  Adam<double> adam({&p}, o);
  const double g1[2] = {0.3, -4.0}, g2[2] = {-0.1, 1.0};
  double m[2] = {0, 0}, v[2] = {0, 0}, w[2] = {1.0, -2.0};
  for (int t = 1; t <= 2; ++t) {
    const double* g = t == 1 ? g1 : g2;
    p.grad << g[0], g[1];
    adam.step();
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      w[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(p.value(0, i) == doctest::Approx(w[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("adam clips the global gradient norm") {
  Parameter<double> a("a", 1, 1), b("b", 1, 1);
  AdamOptions o;
  o.max_grad_norm = 1.0;
  o.learning_rate = 1.0;
  o.epsilon = 10.0;  // large eps keeps the first step proportional to the clipped gradient
  Adam<double> adam({&a, &b}, o);
  a.grad(0, 0) = 3.0;
  b.grad(0, 0) = 4.0;
  CHECK(adam.step() == doctest::Approx(5.0));
  const double ga = 3.0 / (5.0 + 1e-6), gb = 4.0 / (5.0 + 1e-6);
  CHECK(a.value(0, 0) == doctest::Approx(-ga / (ga + 10.0)).epsilon(1e-12));
  CHECK(b.value(0, 0) == doctest::Approx(-gb / (gb + 10.0)).epsilon(1e-12));
}

TEST_CASE("parameter files round-trip and reject mismatched layouts") {
  Rng rng(4);
  const auto path = std::filesystem::temp_directory_path() / "url_lens_params.bin";
  Linear<float> a(3, 2), b(3, 2), c(3, 4);
  a.reset_parameters(rng);
  save_parameters<float>(path, a.parameters());
  load_parameters<float>(path, b.parameters());
  CHECK(a.weight().value == b.weight().value);
  CHECK(a.bias().value == b.bias().value);
  CHECK_THROWS(load_parameters<float>(path, c.parameters()));
  std::filesystem::remove(path);
}
