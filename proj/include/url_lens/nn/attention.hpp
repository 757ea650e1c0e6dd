#pragma once

#include <vector>

#include "url_lens/nn/layers.hpp"

namespace url_lens::nn {

/// Multi-head self-attention over `tokens` tokens of width `dim`.
/// Relevance: epsilon rule through the projections, and the mixing step
/// redistributes each output token's relevance over its sources in
/// proportion to that token's attention row. Query/key paths receive none.
template <typename T>
class MultiHeadSelfAttention final : public Layer<T> {
 public:
  MultiHeadSelfAttention(Index dim, Index heads, Index tokens);

  std::string kind() const override { return "multi_head_self_attention"; }
  Index input_size() const override { return dim_ * tokens_; }
  Index output_size() const override { return dim_ * tokens_; }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  Matrix<T> relevance(const Matrix<T>& relevance_out, T epsilon) const override;
  std::vector<Parameter<T>*> parameters() override { return {&w_qkv_, &b_qkv_, &w_out_, &b_out_}; }
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MultiHeadSelfAttention>(*this); }

  Index heads() const { return heads_; }
  Index tokens() const { return tokens_; }
  /// Attention of sample b, head h from the last forward: tokens x tokens, row-stochastic.
  Matrix<T> attention(Index b, Index h) const;
  /// Test hook: replace softmax weights by 1/tokens.
  void force_uniform(bool on) { uniform_ = on; }

 private:
  Index dim_, heads_, tokens_, head_dim_;
  bool uniform_ = false;
  Parameter<T> w_qkv_;  // 3*dim x dim
  Parameter<T> b_qkv_;
  Parameter<T> w_out_;  // dim x dim
  Parameter<T> b_out_;
  Matrix<T> x_;     // (B*N) x D
  Matrix<T> qkv_;   // (B*N) x 3D
  Matrix<T> attn_;  // (B*H*N) x N
  Matrix<T> mixed_; // (B*N) x D
  Matrix<T> y_;     // (B*N) x D
};

/// Post-norm encoder block: y1 = LN(x + MHSA(x)); y = LN(y1 + FFN(y1)), FFN = Linear-ReLU-Linear.
/// Residual sums split relevance in proportion to each summand's contribution.
template <typename T>
class TransformerEncoderLayer final : public Layer<T> {
 public:
  TransformerEncoderLayer(Index dim, Index heads, Index tokens, Index ffn_dim);

  std::string kind() const override { return "transformer_encoder_layer"; }
  Index input_size() const override { return dim_ * tokens_; }
  Index output_size() const override { return dim_ * tokens_; }
  Matrix<T> forward(const Matrix<T>& x) override;
  Matrix<T> backward(const Matrix<T>& grad_out) override;
  Matrix<T> relevance(const Matrix<T>& relevance_out, T epsilon) const override;
  std::vector<Parameter<T>*> parameters() override;
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<TransformerEncoderLayer>(*this); }

  MultiHeadSelfAttention<T>& attention() { return attn_; }
  const MultiHeadSelfAttention<T>& attention() const { return attn_; }

 private:
  Index dim_, tokens_;
  MultiHeadSelfAttention<T> attn_;
  LayerNorm<T> norm1_, norm2_;
  Linear<T> ff1_;
  ReLU<T> act_;
  Linear<T> ff2_;
  Matrix<T> x_, a_, y1_, f_;
};

}  // namespace url_lens::nn
