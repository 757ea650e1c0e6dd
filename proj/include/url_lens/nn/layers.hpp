#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "url_lens/common/rng.hpp"
#include "url_lens/nn/tensor.hpp"

namespace url_lens::nn {

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix<T>::Zero(rows, cols)), grad(Matrix<T>::Zero(rows, cols)) {}
};

/// Raised when relevance propagation reaches a layer without a rule.
class UnsupportedLayerError : public std::runtime_error {
 public:
  explicit UnsupportedLayerError(const std::string& kind)
      : std::runtime_error("relevance propagation: unsupported layer kind '" + kind + "'"), kind_(kind) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

/// A differentiable stage. forward() caches what backward() and relevance()
/// need, so one forward must precede each backward/relevance call.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Index input_size() const = 0;
  virtual Index output_size() const = 0;

  virtual Matrix<T> forward(const Matrix<T>& x) = 0;
  /// Accumulates parameter gradients and returns d(loss)/d(input).
  virtual Matrix<T> backward(const Matrix<T>& grad_out) = 0;
  /// Epsilon-rule relevance of the cached input given output relevance.
  virtual Matrix<T> relevance(const Matrix<T>& /*relevance_out*/, T /*epsilon*/) const {
    throw UnsupportedLayerError(kind());
  }

  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  virtual void reset_parameters(Rng& /*rng*/) {}
  virtual std::unique_ptr<Layer<T>> clone() const = 0;
};

/// y = x W^T + b, applied independently to `tokens` row segments of each sample.
template <typename T>
class Linear final : public Layer<T> {
 public:
  Linear(Index in, Index out, Index tokens = 1, bool bias = true);

  std::string kind() const override { return "linear"; }
  Index input_size() const override { return in_ * tokens_; }
  Index output_size() const override { return out_ * tokens_; }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  Matrix<T> relevance(const Matrix<T>& relevance_out, T epsilon) const override;
  std::vector<Parameter<T>*> parameters() override;
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Linear>(*this); }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  bool has_bias() const { return has_bias_; }
  void scale_weights(T factor) { weight_.value *= factor; }

 private:
  Index in_, out_, tokens_;
  bool has_bias_;
  Parameter<T> weight_;  // out x in
  Parameter<T> bias_;    // 1 x out
  Matrix<T> x_;          // (B*tokens) x in
  Matrix<T> z_;          // (B*tokens) x out
};

struct ConvGeometry {
  Shape3 input;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;

  Shape3 output() const {
    return {conv_out(input.height, kernel, stride, pad), conv_out(input.width, kernel, stride, pad), out_channels};
  }
};

/// 2-D convolution over HWC samples via im2col; weights are out x (k*k*in) in (ky, kx, c) order.
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(ConvGeometry geometry, bool bias = true);

  std::string kind() const override { return "conv2d"; }
  Index input_size() const override { return geom_.input.size(); }
  Index output_size() const override { return out_shape_.size(); }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  Matrix<T> relevance(const Matrix<T>& relevance_out, T epsilon) const override;
  std::vector<Parameter<T>*> parameters() override;
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

  const ConvGeometry& geometry() const { return geom_; }
  Shape3 output_shape() const { return out_shape_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  /// The first layer of a network never needs d(loss)/d(pixels) during training.
  void set_input_grad(bool enabled) { input_grad_ = enabled; }

 private:
  ConvGeometry geom_;
  Shape3 out_shape_;
  bool has_bias_;
  bool input_grad_ = true;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Matrix<T> x_;
  Matrix<T> cols_;  // (B*P) x (k*k*C)
  Matrix<T> z_;     // (B*P) x out
};

/// Transposed convolution: output extent (in - 1) * stride - 2 * pad + kernel.
template <typename T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(Shape3 input, int out_channels, int kernel, int stride, int pad);

  std::string kind() const override { return "conv_transpose2d"; }
  Index input_size() const override { return in_shape_.size(); }
  Index output_size() const override { return out_shape_.size(); }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  std::vector<Parameter<T>*> parameters() override;
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ConvTranspose2d>(*this); }

  Shape3 output_shape() const { return out_shape_; }

 private:
  Shape3 in_shape_;
  Shape3 out_shape_;
  ConvGeometry geom_;  // the equivalent forward conv from out_shape_ to in_shape_
  Parameter<T> weight_;  // in x (k*k*out)
  Parameter<T> bias_;
  Matrix<T> x_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  explicit ReLU(Index size) : size_(size) {}
  std::string kind() const override { return "relu"; }
  Index input_size() const override { return size_; }
  Index output_size() const override { return size_; }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  Matrix<T> relevance(const Matrix<T>& relevance_out, T) const override { return relevance_out; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReLU>(*this); }

 private:
  Index size_;
  Matrix<T> y_;
};

/// Elementwise tanh. Has no relevance rule.
template <typename T>
class Tanh final : public Layer<T> {
 public:
  explicit Tanh(Index size) : size_(size) {}
  std::string kind() const override { return "tanh"; }
  Index input_size() const override { return size_; }
  Index output_size() const override { return size_; }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Tanh>(*this); }

 private:
  Index size_;
  Matrix<T> y_;
};

/// Normalizes each `dim`-wide token; relevance passes through unchanged.
template <typename T>
class LayerNorm final : public Layer<T> {
 public:
  LayerNorm(Index dim, Index tokens, T eps = T(1e-5));
  std::string kind() const override { return "layer_norm"; }
  Index input_size() const override { return dim_ * tokens_; }
  Index output_size() const override { return dim_ * tokens_; }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  Matrix<T> relevance(const Matrix<T>& relevance_out, T) const override { return relevance_out; }
  std::vector<Parameter<T>*> parameters() override { return {&gamma_, &beta_}; }
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<LayerNorm>(*this); }

 private:
  Index dim_, tokens_;
  T eps_;
  Parameter<T> gamma_, beta_;
  Matrix<T> xhat_;     // (B*tokens) x dim
  Matrix<T> inv_std_;  // (B*tokens) x 1
};

/// Adds a learned per-token embedding; the embedding absorbs its share of relevance.
template <typename T>
class PositionalEmbedding final : public Layer<T> {
 public:
  PositionalEmbedding(Index tokens, Index dim);
  std::string kind() const override { return "positional_embedding"; }
  Index input_size() const override { return tokens_ * dim_; }
  Index output_size() const override { return tokens_ * dim_; }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  Matrix<T> relevance(const Matrix<T>& relevance_out, T epsilon) const override;
  std::vector<Parameter<T>*> parameters() override { return {&embedding_}; }
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<PositionalEmbedding>(*this); }

  Parameter<T>& embedding() { return embedding_; }

 private:
  Index tokens_, dim_;
  Parameter<T> embedding_;  // 1 x (tokens*dim)
  Matrix<T> x_, y_;
};

/// Mean over tokens: (B, tokens*dim) -> (B, dim).
template <typename T>
class TokenMean final : public Layer<T> {
 public:
  TokenMean(Index tokens, Index dim) : tokens_(tokens), dim_(dim) {}
  std::string kind() const override { return "token_mean"; }
  Index input_size() const override { return tokens_ * dim_; }
  Index output_size() const override { return dim_; }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  Matrix<T> relevance(const Matrix<T>& relevance_out, T epsilon) const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<TokenMean>(*this); }

 private:
  Index tokens_, dim_;
  Matrix<T> x_, y_;
};

/// Ordered layer stack with deep-copy semantics.
template <typename T>
class Sequential {
 public:
  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    push(std::move(layer));
    return ref;
  }
  void push(std::unique_ptr<Layer<T>> layer);

  Matrix<T> forward(const Matrix<T>& x);
  Matrix<T> backward(const Matrix<T>& grad_out);
  Matrix<T> relevance(const Matrix<T>& relevance_out, T epsilon) const;

  std::vector<Parameter<T>*> parameters();
  void reset_parameters(Rng& rng);

  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  Layer<T>& operator[](std::size_t i) { return *layers_[i]; }
  const Layer<T>& operator[](std::size_t i) const { return *layers_[i]; }
  Layer<T>& back() { return *layers_.back(); }
  Index input_size() const { return layers_.front()->input_size(); }
  Index output_size() const { return layers_.back()->output_size(); }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

std::size_t parameter_count(const auto& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename T>
void zero_grad(const std::vector<Parameter<T>*>& params) {
  for (auto* p : params) p->grad.setZero();
}

/// Copy values between parameter lists of identical layout.
template <typename T>
void copy_values(const std::vector<Parameter<T>*>& from, const std::vector<Parameter<T>*>& to) {
  if (from.size() != to.size()) throw std::invalid_argument("copy_values: parameter lists differ");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i]->value.rows() != to[i]->value.rows() || from[i]->value.cols() != to[i]->value.cols()) {
      throw std::invalid_argument("copy_values: shape mismatch at " + from[i]->name);
    }
    to[i]->value = from[i]->value;
  }
}

/// Hash of parameter bytes, for frozen-weight checks.
template <typename T>
std::uint64_t parameter_hash(const std::vector<Parameter<T>*>& params);

// im2col helpers shared by conv layers; `in` is one HWC sample.
template <typename T>
void im2col(const T* in, const ConvGeometry& g, T* cols);
template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* in);

}  // namespace url_lens::nn
