#include "url_lens/nn/attention.hpp"

#include <cmath>

namespace url_lens::nn {

template <typename T>
MultiHeadSelfAttention<T>::MultiHeadSelfAttention(Index dim, Index heads, Index tokens)
    : dim_(dim),
      heads_(heads),
      tokens_(tokens),
      head_dim_(dim / heads),
      w_qkv_("w_qkv", 3 * dim, dim),
      b_qkv_("b_qkv", 1, 3 * dim),
      w_out_("w_out", dim, dim),
      b_out_("b_out", 1, dim) {
  if (heads <= 0 || dim % heads != 0) throw std::invalid_argument("MultiHeadSelfAttention: dim must divide by heads");
}

template <typename T>
Matrix<T> MultiHeadSelfAttention<T>::attention(Index b, Index h) const {
  return attn_.middleRows((b * heads_ + h) * tokens_, tokens_);
}

template <typename T>
Matrix<T> MultiHeadSelfAttention<T>::forward(const Matrix<T>& x) {
  const Index B = x.rows(), N = tokens_, D = dim_, dh = head_dim_;
  x_ = ConstMatrixMap<T>(x.data(), B * N, D);
  qkv_.noalias() = x_ * w_qkv_.value.transpose();
  qkv_.rowwise() += b_qkv_.value.row(0);
  attn_.resize(B * heads_ * N, N);
  mixed_.resize(B * N, D);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < heads_; ++h) {
      auto q = qkv_.block(b * N, h * dh, N, dh);
      auto k = qkv_.block(b * N, D + h * dh, N, dh);
      auto v = qkv_.block(b * N, 2 * D + h * dh, N, dh);
      auto a = attn_.middleRows((b * heads_ + h) * N, N);
      if (uniform_) {
        a.setConstant(T(1) / static_cast<T>(N));
      } else {
        a.noalias() = (q * k.transpose()) * scale;
        for (Index i = 0; i < N; ++i) {
          const T m = a.row(i).maxCoeff();
          a.row(i) = (a.row(i).array() - m).exp();
          a.row(i) /= a.row(i).sum();
        }
      }
      mixed_.block(b * N, h * dh, N, dh).noalias() = a * v;
    }
  }
  y_.noalias() = mixed_ * w_out_.value.transpose();
  y_.rowwise() += b_out_.value.row(0);
  return MatrixMap<T>(y_.data(), B, N * D);
}

template <typename T>
Matrix<T> MultiHeadSelfAttention<T>::backward(const Matrix<T>& grad_out) {
  const Index B = grad_out.rows(), N = tokens_, D = dim_, dh = head_dim_;
  ConstMatrixMap<T> gy(grad_out.data(), B * N, D);
  w_out_.grad.noalias() += gy.transpose() * mixed_;
  b_out_.grad.row(0) += gy.colwise().sum();
  Matrix<T> gmixed = gy * w_out_.value;
  Matrix<T> gqkv = Matrix<T>::Zero(B * N, 3 * D);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < heads_; ++h) {
      auto q = qkv_.block(b * N, h * dh, N, dh);
      auto k = qkv_.block(b * N, D + h * dh, N, dh);
      auto v = qkv_.block(b * N, 2 * D + h * dh, N, dh);
      auto a = attn_.middleRows((b * heads_ + h) * N, N);
      auto go = gmixed.block(b * N, h * dh, N, dh);
      gqkv.block(b * N, 2 * D + h * dh, N, dh).noalias() = a.transpose() * go;
      if (uniform_) continue;
      Matrix<T> ga = go * v.transpose();
      Matrix<T> gs(N, N);
      for (Index i = 0; i < N; ++i) {
        const T dot = (ga.row(i).array() * a.row(i).array()).sum();
        gs.row(i) = a.row(i).array() * (ga.row(i).array() - dot);
      }
      gs *= scale;
      gqkv.block(b * N, h * dh, N, dh).noalias() = gs * k;
      gqkv.block(b * N, D + h * dh, N, dh).noalias() = gs.transpose() * q;
    }
  }
  w_qkv_.grad.noalias() += gqkv.transpose() * x_;
  b_qkv_.grad.row(0) += gqkv.colwise().sum();
  Matrix<T> gx = gqkv * w_qkv_.value;
  return MatrixMap<T>(gx.data(), B, N * D);
}

template <typename T>
Matrix<T> MultiHeadSelfAttention<T>::relevance(const Matrix<T>& relevance_out, T epsilon) const {
  const Index B = relevance_out.rows(), N = tokens_, D = dim_, dh = head_dim_;
  const auto stab = [epsilon](T z) { return stabilizer(z, epsilon); };
  ConstMatrixMap<T> ry(relevance_out.data(), B * N, D);
  // output projection
  Matrix<T> s = ry.array() / y_.unaryExpr(stab).array();
  Matrix<T> rmixed = (mixed_.array() * (s * w_out_.value).array()).matrix();
  // mixing: R_v[j] = sum_i A_ij R_o[i]
  Matrix<T> rv(B * N, D);
  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < heads_; ++h) {
      auto a = attn_.middleRows((b * heads_ + h) * N, N);
      rv.block(b * N, h * dh, N, dh).noalias() = a.transpose() * rmixed.block(b * N, h * dh, N, dh);
    }
  }
  // value projection
  const auto v = qkv_.middleCols(2 * D, D);
  Matrix<T> sv = rv.array() / v.unaryExpr(stab).array();
  Matrix<T> rx = (x_.array() * (sv * w_qkv_.value.middleRows(2 * D, D)).array()).matrix();
  return MatrixMap<T>(rx.data(), B, N * D);
}

template <typename T>
void MultiHeadSelfAttention<T>::reset_parameters(Rng& rng) {
  // Xavier-normal
  const double std_qkv = std::sqrt(2.0 / static_cast<double>(dim_ + dim_));
  for (Index i = 0; i < w_qkv_.value.size(); ++i) w_qkv_.value.data()[i] = static_cast<T>(rng.normal() * std_qkv);
  for (Index i = 0; i < w_out_.value.size(); ++i) w_out_.value.data()[i] = static_cast<T>(rng.normal() * std_qkv);
  b_qkv_.value.setZero();
  b_out_.value.setZero();
}

template <typename T>
TransformerEncoderLayer<T>::TransformerEncoderLayer(Index dim, Index heads, Index tokens, Index ffn_dim)
    : dim_(dim),
      tokens_(tokens),
      attn_(dim, heads, tokens),
      norm1_(dim, tokens),
      norm2_(dim, tokens),
      ff1_(dim, ffn_dim, tokens),
      act_(ffn_dim * tokens),
      ff2_(ffn_dim, dim, tokens) {}

template <typename T>
Matrix<T> TransformerEncoderLayer<T>::forward(const Matrix<T>& x) {
  x_ = x;
  a_ = attn_.forward(x);
  y1_ = norm1_.forward(x + a_);
  f_ = ff2_.forward(act_.forward(ff1_.forward(y1_)));
  return norm2_.forward(y1_ + f_);
}

template <typename T>
Matrix<T> TransformerEncoderLayer<T>::backward(const Matrix<T>& grad_out) {
  Matrix<T> gv = norm2_.backward(grad_out);
  Matrix<T> gy1 = gv + ff1_.backward(act_.backward(ff2_.backward(gv)));
  Matrix<T> gu = norm1_.backward(gy1);
  return gu + attn_.backward(gu);
}

template <typename T>
Matrix<T> TransformerEncoderLayer<T>::relevance(const Matrix<T>& relevance_out, T epsilon) const {
  const auto stab = [epsilon](T z) { return stabilizer(z, epsilon); };
  Matrix<T> rv = norm2_.relevance(relevance_out, epsilon);
  Matrix<T> sv = rv.array() / (y1_ + f_).unaryExpr(stab).array();
  Matrix<T> ry1 = (y1_.array() * sv.array()).matrix();
  Matrix<T> rf = (f_.array() * sv.array()).matrix();
  ry1 += ff1_.relevance(act_.relevance(ff2_.relevance(rf, epsilon), epsilon), epsilon);
  Matrix<T> ru = norm1_.relevance(ry1, epsilon);
  Matrix<T> su = ru.array() / (x_ + a_).unaryExpr(stab).array();
  Matrix<T> rx = (x_.array() * su.array()).matrix();
  Matrix<T> ra = (a_.array() * su.array()).matrix();
  return rx + attn_.relevance(ra, epsilon);
}

template <typename T>
std::vector<Parameter<T>*> TransformerEncoderLayer<T>::parameters() {
  std::vector<Parameter<T>*> out = attn_.parameters();
  for (auto* p : norm1_.parameters()) out.push_back(p);
  for (auto* p : ff1_.parameters()) out.push_back(p);
  for (auto* p : ff2_.parameters()) out.push_back(p);
  for (auto* p : norm2_.parameters()) out.push_back(p);
  return out;
}

template <typename T>
void TransformerEncoderLayer<T>::reset_parameters(Rng& rng) {
  attn_.reset_parameters(rng);
  norm1_.reset_parameters(rng);
  norm2_.reset_parameters(rng);
  ff1_.reset_parameters(rng);
  ff2_.reset_parameters(rng);
  ff2_.scale_weights(T(0.5));
}

template class MultiHeadSelfAttention<float>;
template class MultiHeadSelfAttention<double>;
template class TransformerEncoderLayer<float>;
template class TransformerEncoderLayer<double>;

}  // namespace url_lens::nn
