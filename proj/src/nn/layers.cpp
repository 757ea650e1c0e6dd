#include "url_lens/nn/layers.hpp"

#include <cmath>
#include <cstring>
#include <span>

#include "url_lens/common/hash.hpp"

namespace url_lens::nn {

namespace {

template <typename T>
void he_normal(Matrix<T>& w, Index fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(rng.normal() * std);
}

}  // namespace

// ---------------------------------------------------------------- im2col

template <typename T>
void im2col(const T* in, const ConvGeometry& g, T* cols) {
  const Shape3 out = g.output();
  const int C = g.input.channels, k = g.kernel;
  const Index K = static_cast<Index>(k) * k * C;
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      T* row = cols + (static_cast<Index>(oy) * out.width + ox) * K;
      const int x0 = ox * g.stride - g.pad;
      const bool full_row = x0 >= 0 && x0 + k <= g.input.width;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * g.stride - g.pad + ky;
        T* dst = row + static_cast<Index>(ky) * k * C;
        if (iy < 0 || iy >= g.input.height) {
          std::fill(dst, dst + k * C, T(0));
          continue;
        }
        const T* src_row = in + static_cast<Index>(iy) * g.input.width * C;
        if (full_row) {
          std::memcpy(dst, src_row + static_cast<Index>(x0) * C, sizeof(T) * k * C);
          continue;
        }
        for (int kx = 0; kx < k; ++kx) {
          const int ix = x0 + kx;
          if (ix < 0 || ix >= g.input.width) {
            std::fill(dst + kx * C, dst + (kx + 1) * C, T(0));
          } else {
            std::memcpy(dst + kx * C, src_row + static_cast<Index>(ix) * C, sizeof(T) * C);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* in) {
  const Shape3 out = g.output();
  const int C = g.input.channels, k = g.kernel;
  const Index K = static_cast<Index>(k) * k * C;
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      const T* row = cols + (static_cast<Index>(oy) * out.width + ox) * K;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * g.stride - g.pad + ky;
        if (iy < 0 || iy >= g.input.height) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * g.stride - g.pad + kx;
          if (ix < 0 || ix >= g.input.width) continue;
          const T* src = row + (static_cast<Index>(ky) * k + kx) * C;
          T* dst = in + (static_cast<Index>(iy) * g.input.width + ix) * C;
          for (int c = 0; c < C; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(Index in, Index out, Index tokens, bool bias)
    : in_(in), out_(out), tokens_(tokens), has_bias_(bias), weight_("weight", out, in), bias_("bias", 1, out) {}

template <typename T>
Matrix<T> Linear<T>::forward(const Matrix<T>& x) {
  if (x.cols() != in_ * tokens_) throw std::invalid_argument("Linear: input width mismatch");
  const Index rows = x.rows() * tokens_;
  x_ = ConstMatrixMap<T>(x.data(), rows, in_);
  z_.noalias() = x_ * weight_.value.transpose();
  if (has_bias_) z_.rowwise() += bias_.value.row(0);
  return MatrixMap<T>(z_.data(), x.rows(), out_ * tokens_);
}

template <typename T>
Matrix<T> Linear<T>::backward(const Matrix<T>& grad_out) {
  const Index rows = grad_out.rows() * tokens_;
  ConstMatrixMap<T> g(grad_out.data(), rows, out_);
  weight_.grad.noalias() += g.transpose() * x_;
  if (has_bias_) bias_.grad.row(0) += g.colwise().sum();
  Matrix<T> gx = g * weight_.value;
  return MatrixMap<T>(gx.data(), grad_out.rows(), in_ * tokens_);
}

template <typename T>
Matrix<T> Linear<T>::relevance(const Matrix<T>& relevance_out, T epsilon) const {
  const Index rows = relevance_out.rows() * tokens_;
  ConstMatrixMap<T> r(relevance_out.data(), rows, out_);
  Matrix<T> s = r.array() / z_.unaryExpr([epsilon](T z) { return stabilizer(z, epsilon); }).array();
  Matrix<T> rx = (x_.array() * (s * weight_.value).array()).matrix();
  return MatrixMap<T>(rx.data(), relevance_out.rows(), in_ * tokens_);
}

template <typename T>
std::vector<Parameter<T>*> Linear<T>::parameters() {
  if (has_bias_) return {&weight_, &bias_};
  return {&weight_};
}

template <typename T>
void Linear<T>::reset_parameters(Rng& rng) {
  he_normal(weight_.value, in_, rng);
  bias_.value.setZero();
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(ConvGeometry geometry, bool bias)
    : geom_(geometry),
      out_shape_(geometry.output()),
      has_bias_(bias),
      weight_("weight", geometry.out_channels,
              static_cast<Index>(geometry.kernel) * geometry.kernel * geometry.input.channels),
      bias_("bias", 1, geometry.out_channels) {
  if (out_shape_.height <= 0 || out_shape_.width <= 0) throw std::invalid_argument("Conv2d: empty output");
}

template <typename T>
Matrix<T> Conv2d<T>::forward(const Matrix<T>& x) {
  if (x.cols() != geom_.input.size()) throw std::invalid_argument("Conv2d: input size mismatch");
  const Index B = x.rows();
  const Index P = out_shape_.spatial();
  const Index K = weight_.value.cols();
  x_ = x;
  cols_.resize(B * P, K);
  for (Index b = 0; b < B; ++b) im2col(x.row(b).data(), geom_, cols_.data() + b * P * K);
  z_.noalias() = cols_ * weight_.value.transpose();
  if (has_bias_) z_.rowwise() += bias_.value.row(0);
  return MatrixMap<T>(z_.data(), B, P * out_shape_.channels);
}

template <typename T>
Matrix<T> Conv2d<T>::backward(const Matrix<T>& grad_out) {
  const Index B = grad_out.rows();
  const Index P = out_shape_.spatial();
  const Index K = weight_.value.cols();
  ConstMatrixMap<T> g(grad_out.data(), B * P, out_shape_.channels);
  weight_.grad.noalias() += g.transpose() * cols_;
  if (has_bias_) bias_.grad.row(0) += g.colwise().sum();
  if (!input_grad_) return {};
  Matrix<T> gcols = g * weight_.value;
  Matrix<T> gx = Matrix<T>::Zero(B, geom_.input.size());
  for (Index b = 0; b < B; ++b) col2im(gcols.data() + b * P * K, geom_, gx.row(b).data());
  return gx;
}

template <typename T>
Matrix<T> Conv2d<T>::relevance(const Matrix<T>& relevance_out, T epsilon) const {
  const Index B = relevance_out.rows();
  const Index P = out_shape_.spatial();
  const Index K = weight_.value.cols();
  ConstMatrixMap<T> r(relevance_out.data(), B * P, out_shape_.channels);
  Matrix<T> s = r.array() / z_.unaryExpr([epsilon](T z) { return stabilizer(z, epsilon); }).array();
  Matrix<T> c = s * weight_.value;
  Matrix<T> back = Matrix<T>::Zero(B, geom_.input.size());
  for (Index b = 0; b < B; ++b) col2im(c.data() + b * P * K, geom_, back.row(b).data());
  return (x_.array() * back.array()).matrix();
}

template <typename T>
std::vector<Parameter<T>*> Conv2d<T>::parameters() {
  if (has_bias_) return {&weight_, &bias_};
  return {&weight_};
}

template <typename T>
void Conv2d<T>::reset_parameters(Rng& rng) {
  he_normal(weight_.value, weight_.value.cols(), rng);
  bias_.value.setZero();
}

// ---------------------------------------------------------------- ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(Shape3 input, int out_channels, int kernel, int stride, int pad)
    : in_shape_(input),
      out_shape_{(input.height - 1) * stride - 2 * pad + kernel, (input.width - 1) * stride - 2 * pad + kernel,
                 out_channels},
      geom_{out_shape_, input.channels, kernel, stride, pad},
      weight_("weight", input.channels, static_cast<Index>(kernel) * kernel * out_channels),
      bias_("bias", 1, out_channels) {
  if (!(geom_.output() == in_shape_)) throw std::invalid_argument("ConvTranspose2d: inconsistent geometry");
}

template <typename T>
Matrix<T> ConvTranspose2d<T>::forward(const Matrix<T>& x) {
  if (x.cols() != in_shape_.size()) throw std::invalid_argument("ConvTranspose2d: input size mismatch");
  const Index B = x.rows();
  const Index P = in_shape_.spatial();
  const Index K = weight_.value.cols();
  x_ = ConstMatrixMap<T>(x.data(), B * P, in_shape_.channels);
  Matrix<T> cols = x_ * weight_.value;
  Matrix<T> y = Matrix<T>::Zero(B, out_shape_.size());
  for (Index b = 0; b < B; ++b) col2im(cols.data() + b * P * K, geom_, y.row(b).data());
  MatrixMap<T> ym(y.data(), B * out_shape_.spatial(), out_shape_.channels);
  ym.rowwise() += bias_.value.row(0);
  return y;
}

template <typename T>
Matrix<T> ConvTranspose2d<T>::backward(const Matrix<T>& grad_out) {
  const Index B = grad_out.rows();
  const Index P = in_shape_.spatial();
  const Index K = weight_.value.cols();
  Matrix<T> gcols(B * P, K);
  for (Index b = 0; b < B; ++b) im2col(grad_out.row(b).data(), geom_, gcols.data() + b * P * K);
  weight_.grad.noalias() += x_.transpose() * gcols;
  ConstMatrixMap<T> g(grad_out.data(), B * out_shape_.spatial(), out_shape_.channels);
  bias_.grad.row(0) += g.colwise().sum();
  Matrix<T> gx = gcols * weight_.value.transpose();
  return MatrixMap<T>(gx.data(), B, in_shape_.size());
}

template <typename T>
std::vector<Parameter<T>*> ConvTranspose2d<T>::parameters() {
  return {&weight_, &bias_};
}

template <typename T>
void ConvTranspose2d<T>::reset_parameters(Rng& rng) {
  he_normal(weight_.value, static_cast<Index>(in_shape_.channels) * geom_.kernel * geom_.kernel /
                               (geom_.stride * geom_.stride),
            rng);
  bias_.value.setZero();
}

// ---------------------------------------------------------------- activations

template <typename T>
Matrix<T> ReLU<T>::forward(const Matrix<T>& x) {
  y_ = x.cwiseMax(T(0));
  return y_;
}

template <typename T>
Matrix<T> ReLU<T>::backward(const Matrix<T>& grad_out) {
  return (y_.array() > T(0)).select(grad_out, T(0));
}

template <typename T>
Matrix<T> Tanh<T>::forward(const Matrix<T>& x) {
  y_ = x.array().tanh();
  return y_;
}

template <typename T>
Matrix<T> Tanh<T>::backward(const Matrix<T>& grad_out) {
  return (grad_out.array() * (T(1) - y_.array().square())).matrix();
}

// ---------------------------------------------------------------- LayerNorm

template <typename T>
LayerNorm<T>::LayerNorm(Index dim, Index tokens, T eps)
    : dim_(dim), tokens_(tokens), eps_(eps), gamma_("gamma", 1, dim), beta_("beta", 1, dim) {
  gamma_.value.setOnes();
}

template <typename T>
Matrix<T> LayerNorm<T>::forward(const Matrix<T>& x) {
  const Index rows = x.rows() * tokens_;
  ConstMatrixMap<T> xm(x.data(), rows, dim_);
  xhat_.resize(rows, dim_);
  inv_std_.resize(rows, 1);
  for (Index r = 0; r < rows; ++r) {
    const T mean = xm.row(r).mean();
    const T var = (xm.row(r).array() - mean).square().mean();
    const T inv = T(1) / std::sqrt(var + eps_);
    inv_std_(r, 0) = inv;
    xhat_.row(r) = (xm.row(r).array() - mean) * inv;
  }
  Matrix<T> y = (xhat_.array().rowwise() * gamma_.value.row(0).array()).rowwise() + beta_.value.row(0).array();
  return MatrixMap<T>(y.data(), x.rows(), dim_ * tokens_);
}

template <typename T>
Matrix<T> LayerNorm<T>::backward(const Matrix<T>& grad_out) {
  const Index rows = grad_out.rows() * tokens_;
  ConstMatrixMap<T> g(grad_out.data(), rows, dim_);
  gamma_.grad.row(0) += (g.array() * xhat_.array()).matrix().colwise().sum();
  beta_.grad.row(0) += g.colwise().sum();
  Matrix<T> gxhat = g.array().rowwise() * gamma_.value.row(0).array();
  Matrix<T> gx(rows, dim_);
  for (Index r = 0; r < rows; ++r) {
    const T m1 = gxhat.row(r).mean();
    const T m2 = (gxhat.row(r).array() * xhat_.row(r).array()).mean();
    gx.row(r) = inv_std_(r, 0) * (gxhat.row(r).array() - m1 - xhat_.row(r).array() * m2);
  }
  return MatrixMap<T>(gx.data(), grad_out.rows(), dim_ * tokens_);
}

template <typename T>
void LayerNorm<T>::reset_parameters(Rng&) {
  gamma_.value.setOnes();
  beta_.value.setZero();
}

// ---------------------------------------------------------------- PositionalEmbedding

template <typename T>
PositionalEmbedding<T>::PositionalEmbedding(Index tokens, Index dim)
    : tokens_(tokens), dim_(dim), embedding_("embedding", 1, tokens * dim) {}

template <typename T>
Matrix<T> PositionalEmbedding<T>::forward(const Matrix<T>& x) {
  x_ = x;
  y_ = x.rowwise() + embedding_.value.row(0);
  return y_;
}

template <typename T>
Matrix<T> PositionalEmbedding<T>::backward(const Matrix<T>& grad_out) {
  embedding_.grad.row(0) += grad_out.colwise().sum();
  return grad_out;
}

template <typename T>
Matrix<T> PositionalEmbedding<T>::relevance(const Matrix<T>& relevance_out, T epsilon) const {
  return (x_.array() * relevance_out.array() /
          y_.unaryExpr([epsilon](T z) { return stabilizer(z, epsilon); }).array())
      .matrix();
}

template <typename T>
void PositionalEmbedding<T>::reset_parameters(Rng& rng) {
  for (Index i = 0; i < embedding_.value.size(); ++i) embedding_.value.data()[i] = static_cast<T>(0.02 * rng.normal());
}

// ---------------------------------------------------------------- TokenMean

template <typename T>
Matrix<T> TokenMean<T>::forward(const Matrix<T>& x) {
  x_ = x;
  y_ = Matrix<T>::Zero(x.rows(), dim_);
  for (Index n = 0; n < tokens_; ++n) y_ += x.middleCols(n * dim_, dim_);
  y_ /= static_cast<T>(tokens_);
  return y_;
}

template <typename T>
Matrix<T> TokenMean<T>::backward(const Matrix<T>& grad_out) {
  Matrix<T> gx(grad_out.rows(), tokens_ * dim_);
  for (Index n = 0; n < tokens_; ++n) gx.middleCols(n * dim_, dim_) = grad_out / static_cast<T>(tokens_);
  return gx;
}

template <typename T>
Matrix<T> TokenMean<T>::relevance(const Matrix<T>& relevance_out, T epsilon) const {
  Matrix<T> s = relevance_out.array() / y_.unaryExpr([epsilon](T z) { return stabilizer(z, epsilon); }).array();
  Matrix<T> rx(x_.rows(), x_.cols());
  for (Index n = 0; n < tokens_; ++n) {
    rx.middleCols(n * dim_, dim_) = x_.middleCols(n * dim_, dim_).array() * s.array() / static_cast<T>(tokens_);
  }
  return rx;
}

// ---------------------------------------------------------------- Sequential

template <typename T>
Sequential<T>::Sequential(const Sequential& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Sequential<T>& Sequential<T>::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
void Sequential<T>::push(std::unique_ptr<Layer<T>> layer) {
  if (!layers_.empty() && layers_.back()->output_size() != layer->input_size()) {
    throw std::invalid_argument("Sequential: " + layer->kind() + " input size does not match previous output");
  }
  layers_.push_back(std::move(layer));
}

template <typename T>
Matrix<T> Sequential<T>::forward(const Matrix<T>& x) {
  Matrix<T> h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

template <typename T>
Matrix<T> Sequential<T>::backward(const Matrix<T>& grad_out) {
  Matrix<T> g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <typename T>
Matrix<T> Sequential<T>::relevance(const Matrix<T>& relevance_out, T epsilon) const {
  Matrix<T> r = relevance_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) r = (*it)->relevance(r, epsilon);
  return r;
}

template <typename T>
std::vector<Parameter<T>*> Sequential<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& l : layers_) {
    for (auto* p : l->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
void Sequential<T>::reset_parameters(Rng& rng) {
  for (auto& l : layers_) l->reset_parameters(rng);
}

template <typename T>
std::uint64_t parameter_hash(const std::vector<Parameter<T>*>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* p : params) {
    h = fnv1a(std::as_bytes(std::span(p->value.data(), static_cast<std::size_t>(p->value.size()))), h);
  }
  return h;
}

#define URL_LENS_INSTANTIATE(T)                                                   \
  template void im2col<T>(const T*, const ConvGeometry&, T*);                     \
  template void col2im<T>(const T*, const ConvGeometry&, T*);                     \
  template class Linear<T>;                                                       \
  template class Conv2d<T>;                                                       \
  template class ConvTranspose2d<T>;                                              \
  template class ReLU<T>;                                                         \
  template class Tanh<T>;                                                         \
  template class LayerNorm<T>;                                                    \
  template class PositionalEmbedding<T>;                                          \
  template class TokenMean<T>;                                                    \
  template class Sequential<T>;                                                   \
  template std::uint64_t parameter_hash<T>(const std::vector<Parameter<T>*>&);

URL_LENS_INSTANTIATE(float)
URL_LENS_INSTANTIATE(double)

#undef URL_LENS_INSTANTIATE

}  // namespace url_lens::nn
