#include "url_lens/latentlab/vae.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "url_lens/common/image.hpp"
#include "url_lens/modelzoo/encoder.hpp"

namespace url_lens::latentlab {

template <typename T>
Matrix<T> reparameterize(const Matrix<T>& mu, const Matrix<T>& logvar, const Matrix<T>& noise) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols() || mu.rows() != noise.rows() ||
      mu.cols() != noise.cols()) {
    throw std::invalid_argument("reparameterize: shape mismatch");
  }
  return (mu.array() + (logvar.array() * T(0.5)).exp() * noise.array()).matrix();
}

template <typename T>
std::vector<double> gaussian_kl(const Matrix<T>& mu, const Matrix<T>& logvar) {
  std::vector<double> out(static_cast<std::size_t>(mu.rows()), 0.0);
  for (nn::Index i = 0; i < mu.rows(); ++i) {
    double s = 0.0;
    for (nn::Index d = 0; d < mu.cols(); ++d) {
      const double m = mu(i, d), lv = logvar(i, d);
      s += 1.0 + lv - m * m - std::exp(lv);
    }
    out[static_cast<std::size_t>(i)] = -0.5 * s;
  }
  return out;
}

template <typename T>
Vae<T>::Vae(const VaeConfig& config, Rng& rng)
    : config_(config), heads_(1, 1) {
  Shape3 shape = config.input;
  std::vector<Shape3> shapes{shape};
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    nn::ConvGeometry g{shape, config.channels[i], config.kernel, config.stride, config.pad};
    auto& conv = encoder_.template emplace<nn::Conv2d<T>>(g);
    if (i == 0) conv.set_input_grad(false);
    shape = g.output();
    if (shape.height < 1 || shape.width < 1) throw std::invalid_argument("Vae: input too small for the conv stack");
    encoder_.template emplace<nn::ReLU<T>>(shape.size());
    shapes.push_back(shape);
  }
  bottleneck_ = shape;
  heads_ = nn::Linear<T>(bottleneck_.size(), 2 * config.latent);

  decoder_.template emplace<nn::Linear<T>>(config.latent, bottleneck_.size());
  decoder_.template emplace<nn::ReLU<T>>(bottleneck_.size());
  for (std::size_t i = config.channels.size(); i-- > 0;) {
    const Shape3 out = shapes[i];
    auto& deconv = decoder_.template emplace<nn::ConvTranspose2d<T>>(shapes[i + 1], out.channels, config.kernel,
                                                                    config.stride, config.pad);
    if (deconv.output_size() != out.size()) throw std::invalid_argument("Vae: decoder does not invert the encoder");
    if (i > 0) decoder_.template emplace<nn::ReLU<T>>(out.size());
  }
  encoder_.reset_parameters(rng);
  heads_.reset_parameters(rng);
  heads_.scale_weights(T(0.1));
  decoder_.reset_parameters(rng);
}

template <typename T>
typename Vae<T>::Encoding Vae<T>::encode(const Matrix<T>& x) {
  if (x.cols() != config_.input.size()) throw std::invalid_argument("Vae: input shape mismatch");
  const Matrix<T> h = heads_.forward(encoder_.forward(x));
  const int l = config_.latent;
  return {h.leftCols(l), h.rightCols(l)};
}

template <typename T>
Matrix<T> Vae<T>::decode_logits(const Matrix<T>& z) {
  return decoder_.forward(z);
}

template <typename T>
Matrix<T> Vae<T>::reconstruct(const Matrix<T>& x) {
  const auto e = encode(x);
  const Matrix<T> logits = decode_logits(e.mu);
  return (T(1) / (T(1) + (-logits.array()).exp())).matrix();
}

template <typename T>
VaeLoss<T> Vae<T>::loss(const Matrix<T>& x, const Matrix<T>& noise, bool backward) {
  if ((x.array() < T(0)).any() || (x.array() > T(1)).any()) {
    throw std::invalid_argument("vae_loss: inputs must lie in [0, 1]");
  }
  const auto b = x.rows();
  if (b == 0) throw std::invalid_argument("vae_loss: empty batch");
  const auto e = encode(x);
  const Matrix<T> z = reparameterize<T>(e.mu, e.logvar, noise);
  const Matrix<T> logits = decode_logits(z);

  VaeLoss<T> out;
  for (nn::Index i = 0; i < b; ++i) {
    double s = 0.0;
    for (nn::Index p = 0; p < logits.cols(); ++p) {
      const double l = logits(i, p);
      s += std::max(l, 0.0) + std::log1p(std::exp(-std::abs(l))) - static_cast<double>(x(i, p)) * l;
    }
    out.reconstruction += s;
  }
  out.reconstruction /= static_cast<double>(b);
  const auto kl = gaussian_kl<T>(e.mu, e.logvar);
  out.kl = std::accumulate(kl.begin(), kl.end(), 0.0) / static_cast<double>(b);
  out.total = out.reconstruction + out.kl;
  if (!backward) return out;

  const T inv_b = T(1) / static_cast<T>(b);
  const Matrix<T> dlogits = ((T(1) / (T(1) + (-logits.array()).exp())) - x.array()).matrix() * inv_b;
  const Matrix<T> dz = decoder_.backward(dlogits);
  const int l = config_.latent;
  Matrix<T> dh(b, 2 * l);
  const auto sigma = (e.logvar.array() * T(0.5)).exp();
  dh.leftCols(l) = dz + e.mu * inv_b;
  dh.rightCols(l) = (dz.array() * noise.array() * sigma * T(0.5) + (e.logvar.array().exp() - T(1)) * T(0.5) * inv_b)
                        .matrix();
  encoder_.backward(heads_.backward(dh));
  return out;
}

template <typename T>
std::vector<nn::Parameter<T>*> Vae<T>::parameters() {
  auto out = encoder_.parameters();
  for (auto* p : heads_.parameters()) out.push_back(p);
  for (auto* p : decoder_.parameters()) out.push_back(p);
  return out;
}

template class Vae<float>;
template class Vae<double>;
template Matrix<float> reparameterize<float>(const Matrix<float>&, const Matrix<float>&, const Matrix<float>&);
template Matrix<double> reparameterize<double>(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&);
template std::vector<double> gaussian_kl<float>(const Matrix<float>&, const Matrix<float>&);
template std::vector<double> gaussian_kl<double>(const Matrix<double>&, const Matrix<double>&);

namespace {

constexpr std::size_t kChunk = 128;

Matrix<float> batch_input(std::span<const procenv::Observation> frames, std::span<const std::size_t> idx) {
  std::vector<procenv::Observation> picked;
  picked.reserve(idx.size());
  for (std::size_t i : idx) picked.push_back(frames[i]);
  return modelzoo::observations_to_input<float>(picked);
}

}  // namespace

VaeTrainResult train_vae(Vae<float>& model, std::span<const procenv::Observation> frames,
                         const VaeTrainConfig& config) {
  if (frames.empty()) throw std::invalid_argument("train_vae: empty dataset");
  nn::AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  nn::Adam<float> adam(model.parameters(), opts);
  Rng rng(mix_seed(config.seed, 0x7ae));
  std::vector<std::size_t> order(frames.size());
  const int latent = model.config().latent;
  VaeTrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    double total = 0.0, rec = 0.0, kl = 0.0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(config.batch_size)) {
      const std::span idx(order.data() + s, std::min(order.size() - s, static_cast<std::size_t>(config.batch_size)));
      const Matrix<float> x = batch_input(frames, idx);
      Matrix<float> noise(x.rows(), latent);
      for (nn::Index i = 0; i < noise.size(); ++i) noise.data()[i] = static_cast<float>(rng.normal());
      adam.zero_grad();
      const auto l = model.loss(x, noise, true);
      adam.step();
      const double w = static_cast<double>(idx.size());
      total += l.total * w;
      rec += l.reconstruction * w;
      kl += l.kl * w;
    }
    const double n = static_cast<double>(frames.size());
    result.epoch_total.push_back(total / n);
    result.epoch_reconstruction.push_back(rec / n);
    result.epoch_kl.push_back(kl / n);
  }
  return result;
}

Matrix<double> encode_means(Vae<float>& model, std::span<const procenv::Observation> frames) {
  Matrix<double> out(static_cast<nn::Index>(frames.size()), model.config().latent);
  for (std::size_t s = 0; s < frames.size(); s += kChunk) {
    const std::size_t n = std::min(kChunk, frames.size() - s);
    const auto x = modelzoo::observations_to_input<float>(frames.subspan(s, n));
    out.middleRows(static_cast<nn::Index>(s), static_cast<nn::Index>(n)) = model.encode(x).mu.cast<double>();
  }
  return out;
}

std::vector<double> reconstruction_errors(Vae<float>& model, std::span<const procenv::Observation> frames) {
  std::vector<double> out;
  out.reserve(frames.size());
  for (std::size_t s = 0; s < frames.size(); s += kChunk) {
    const std::size_t n = std::min(kChunk, frames.size() - s);
    const auto x = modelzoo::observations_to_input<float>(frames.subspan(s, n));
    const Matrix<float> r = model.reconstruct(x);
    for (nn::Index i = 0; i < x.rows(); ++i) {
      out.push_back((r.row(i) - x.row(i)).cast<double>().squaredNorm() / static_cast<double>(x.cols()));
    }
  }
  return out;
}

std::vector<double> export_reconstructions(Vae<float>& model, std::span<const procenv::Observation> frames,
                                           const std::filesystem::path& png, const std::filesystem::path& csv,
                                           const std::string& config_hash) {
  const auto x = modelzoo::observations_to_input<float>(frames);
  const Matrix<float> r = model.reconstruct(x);
  const Shape3 in = model.config().input;
  const int n = static_cast<int>(frames.size());
  RgbImage grid(in.width * n, in.height * 2);
  for (int i = 0; i < n; ++i) {
    for (int y = 0; y < in.height; ++y) {
      for (int xx = 0; xx < in.width; ++xx) {
        Rgb top{}, bottom{};
        for (int c = 0; c < 3; ++c) {
          const nn::Index k = (static_cast<nn::Index>(y) * in.width + xx) * in.channels + std::min(c, in.channels - 1);
          top[static_cast<std::size_t>(c)] = frames[static_cast<std::size_t>(i)].pixels[static_cast<std::size_t>(k)];
          bottom[static_cast<std::size_t>(c)] =
              static_cast<std::uint8_t>(std::lround(std::clamp(r(i, k), 0.0f, 1.0f) * 255.0f));
        }
        grid.set(i * in.width + xx, y, top);
        grid.set(i * in.width + xx, in.height + y, bottom);
      }
    }
  }
  write_png(png, grid);
  std::vector<double> errors;
  std::ofstream f(csv);
  if (!f) throw std::runtime_error("cannot write " + csv.string());
  f << "# config_hash=" << config_hash << "\nframe,mse\n";
  char buf[32];
  for (int i = 0; i < n; ++i) {
    const double e = (r.row(i) - x.row(i)).cast<double>().squaredNorm() / static_cast<double>(x.cols());
    errors.push_back(e);
    std::snprintf(buf, sizeof buf, "%.9g", e);
    f << i << ',' << buf << '\n';
  }
  return errors;
}

}  // namespace url_lens::latentlab
