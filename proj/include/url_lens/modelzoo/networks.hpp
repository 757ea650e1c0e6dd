#pragma once

#include <memory>
#include <string>
#include <vector>

#include "url_lens/modelzoo/encoder.hpp"
#include "url_lens/nn/attention.hpp"

namespace url_lens::modelzoo {

struct NetConfig {
  EncoderConfig encoder;
  int hidden = 512;
  int num_actions = procenv::kNumActions;
  // Transformer policy
  int embed_dim = 128;
  int heads = 8;
  int layers = 4;
  int ffn_dim = 256;
};

/// What attribution needs from a network: a scored forward pass, the final
/// conv activation map with its gradient, and an ordered layer list for
/// relevance propagation. Every method refers to the latest scores() call.
template <typename T>
class AttributableNet {
 public:
  virtual ~AttributableNet() = default;

  virtual std::string architecture() const = 0;
  virtual int num_actions() const = 0;
  virtual Shape3 input_shape() const = 0;
  virtual Shape3 feature_shape() const = 0;

  /// Q-values or policy logits, one row per input.
  virtual Matrix<T> scores(const Matrix<T>& x) = 0;
  virtual const Matrix<T>& feature_map() const = 0;
  /// d(<grad_scores, scores>)/d(feature map).
  virtual Matrix<T> feature_gradient(const Matrix<T>& grad_scores) = 0;
  /// Layers from input to scores in forward order.
  virtual std::vector<const nn::Layer<T>*> relevance_path() const = 0;

  virtual std::vector<nn::Parameter<T>*> parameters() = 0;
};

/// Encoder -> FC(hidden) -> ReLU -> FC(actions).
template <typename T>
class QNetwork final : public AttributableNet<T> {
 public:
  QNetwork(const NetConfig& config, Rng& rng);

  Matrix<T> forward_q(const Matrix<T>& x);
  /// Backpropagates d(loss)/d(Q) from the latest forward_q.
  void backward_q(const Matrix<T>& grad_q);

  std::string architecture() const override { return "q_network"; }
  int num_actions() const override { return config_.num_actions; }
  Shape3 input_shape() const override { return config_.encoder.input; }
  Shape3 feature_shape() const override { return feature_shape_; }
  Matrix<T> scores(const Matrix<T>& x) override { return forward_q(x); }
  const Matrix<T>& feature_map() const override { return features_; }
  Matrix<T> feature_gradient(const Matrix<T>& grad_scores) override { return head_.backward(grad_scores); }
  std::vector<const nn::Layer<T>*> relevance_path() const override;
  std::vector<nn::Parameter<T>*> parameters() override;

  const NetConfig& config() const { return config_; }

 private:
  NetConfig config_;
  Shape3 feature_shape_;
  nn::Sequential<T> encoder_;
  nn::Sequential<T> head_;
  Matrix<T> features_;
};

template <typename T>
struct PolicyOutput {
  Matrix<T> logits;  // B x actions
  Matrix<T> values;  // B x 1
};

/// Encoder -> torso -> linear actor and critic heads. The torso is an
/// FC(hidden)-ReLU block for the CNN policy and a token Transformer for
/// the Transformer policy.
template <typename T>
class ActorCritic : public AttributableNet<T> {
 public:
  ActorCritic(const NetConfig& config, Rng& rng);
  ~ActorCritic() override = default;

  PolicyOutput<T> forward_policy(const Matrix<T>& x);
  /// Runs the torso and heads on precomputed feature maps.
  PolicyOutput<T> forward_from_features(const Matrix<T>& features);
  void backward_policy(const Matrix<T>& grad_logits, const Matrix<T>& grad_values);

  std::string architecture() const override { return "actor_critic"; }
  int num_actions() const override { return config_.num_actions; }
  Shape3 input_shape() const override { return config_.encoder.input; }
  Shape3 feature_shape() const override { return feature_shape_; }
  Matrix<T> scores(const Matrix<T>& x) override { return forward_policy(x).logits; }
  const Matrix<T>& feature_map() const override { return features_; }
  Matrix<T> feature_gradient(const Matrix<T>& grad_scores) override;
  std::vector<const nn::Layer<T>*> relevance_path() const override;
  std::vector<nn::Parameter<T>*> parameters() override;

  const NetConfig& config() const { return config_; }
  virtual std::unique_ptr<ActorCritic<T>> clone() const { return std::make_unique<ActorCritic<T>>(*this); }

 protected:
  struct TorsoTag {};
  ActorCritic(const NetConfig& config, nn::Sequential<T> torso, nn::Index torso_width, Rng& rng, TorsoTag);

  NetConfig config_;
  Shape3 feature_shape_;
  nn::Sequential<T> encoder_;
  nn::Sequential<T> torso_;
  nn::Linear<T> actor_;
  nn::Linear<T> critic_;
  Matrix<T> features_;
};

/// Conv features as 16 spatial tokens -> linear projection to embed_dim ->
/// learned positional embedding -> encoder layers -> token mean -> heads.
template <typename T>
class TransformerPolicy final : public ActorCritic<T> {
 public:
  TransformerPolicy(const NetConfig& config, Rng& rng);

  std::string architecture() const override { return "transformer_policy"; }
  std::unique_ptr<ActorCritic<T>> clone() const override { return std::make_unique<TransformerPolicy<T>>(*this); }

  /// Per layer, per head: tokens x tokens row-stochastic matrices for one observation.
  std::vector<std::vector<Matrix<T>>> attention_maps(const Matrix<T>& single_input);

  void set_uniform_attention(bool on);
  nn::PositionalEmbedding<T>& positional_embedding();
  int token_count() const { return this->feature_shape_.spatial(); }

 private:
  std::vector<nn::TransformerEncoderLayer<T>*> blocks();
};

/// Categorical helpers on logit rows.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits);
template <typename T>
Matrix<T> log_softmax_rows(const Matrix<T>& logits);

}  // namespace url_lens::modelzoo
