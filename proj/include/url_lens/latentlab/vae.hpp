#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "url_lens/nn/adam.hpp"
#include "url_lens/nn/layers.hpp"
#include "url_lens/procenv/env.hpp"

namespace url_lens::latentlab {

using nn::Matrix;
using nn::Shape3;

struct VaeConfig {
  Shape3 input{procenv::kFrameSize, procenv::kFrameSize, procenv::kChannels};
  std::array<int, 3> channels{32, 64, 128};
  int latent = 32;
  int kernel = 4;
  int stride = 2;
  int pad = 1;
};

template <typename T>
struct VaeLoss {
  double reconstruction = 0.0;  // BCE summed over pixels, mean over batch
  double kl = 0.0;              // mean over batch
  double total = 0.0;
};

/// z = mu + exp(logvar / 2) * noise, elementwise.
template <typename T>
Matrix<T> reparameterize(const Matrix<T>& mu, const Matrix<T>& logvar, const Matrix<T>& noise);

/// -0.5 * sum(1 + logvar - mu^2 - exp(logvar)) per row.
template <typename T>
std::vector<double> gaussian_kl(const Matrix<T>& mu, const Matrix<T>& logvar);

/// Three strided conv stages -> linear heads for mu and logvar; linear ->
/// three transposed conv stages -> per-pixel logits.
template <typename T>
class Vae {
 public:
  Vae(const VaeConfig& config, Rng& rng);

  struct Encoding {
    Matrix<T> mu;
    Matrix<T> logvar;
  };

  Encoding encode(const Matrix<T>& x);
  /// Logits of the Bernoulli reconstruction.
  Matrix<T> decode_logits(const Matrix<T>& z);
  /// Reconstruction in [0,1] from the posterior mean.
  Matrix<T> reconstruct(const Matrix<T>& x);

  /// Loss for a batch in [0,1] with the given standard-normal noise (B x latent).
  /// Accumulates gradients when `backward` is set. Throws std::invalid_argument
  /// for inputs outside [0,1].
  VaeLoss<T> loss(const Matrix<T>& x, const Matrix<T>& noise, bool backward);

  std::vector<nn::Parameter<T>*> parameters();
  const VaeConfig& config() const { return config_; }
  Shape3 bottleneck() const { return bottleneck_; }

 private:
  VaeConfig config_;
  Shape3 bottleneck_;
  nn::Sequential<T> encoder_;
  nn::Linear<T> heads_;  // -> [mu | logvar]
  nn::Sequential<T> decoder_;
};

struct VaeTrainConfig {
  int epochs = 10;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct VaeTrainResult {
  std::vector<double> epoch_total;  // mean per-sample loss of each epoch
  std::vector<double> epoch_reconstruction;
  std::vector<double> epoch_kl;
};

/// Throws std::invalid_argument on an empty dataset.
VaeTrainResult train_vae(Vae<float>& model, std::span<const procenv::Observation> frames, const VaeTrainConfig& config);

/// Posterior means, one row per frame, in double.
Matrix<double> encode_means(Vae<float>& model, std::span<const procenv::Observation> frames);

/// Mean per-pixel squared error of each frame's reconstruction.
std::vector<double> reconstruction_errors(Vae<float>& model, std::span<const procenv::Observation> frames);

/// 2 x n grid, originals on top and reconstructions below, plus a CSV of
/// per-image reconstruction errors. Returns the errors.
std::vector<double> export_reconstructions(Vae<float>& model, std::span<const procenv::Observation> frames,
                                           const std::filesystem::path& png, const std::filesystem::path& csv,
                                           const std::string& config_hash);

}  // namespace url_lens::latentlab
