#include "url_lens/modelzoo/networks.hpp"

#include <stdexcept>

namespace url_lens::modelzoo {

namespace {

template <typename T>
void append_layers(std::vector<const nn::Layer<T>*>& out, const nn::Sequential<T>& seq) {
  for (std::size_t i = 0; i < seq.size(); ++i) out.push_back(&seq[i]);
}

template <typename T>
void append_params(std::vector<nn::Parameter<T>*>& out, const std::vector<nn::Parameter<T>*>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

}  // namespace

// ---------------------------------------------------------------- QNetwork

template <typename T>
QNetwork<T>::QNetwork(const NetConfig& config, Rng& rng)
    : config_(config), feature_shape_(encoder_output_shape(config.encoder)), encoder_(make_conv_encoder<T>(config.encoder)) {
  head_.template emplace<nn::Linear<T>>(feature_shape_.size(), config.hidden);
  head_.template emplace<nn::ReLU<T>>(config.hidden);
  head_.template emplace<nn::Linear<T>>(config.hidden, config.num_actions);
  encoder_.reset_parameters(rng);
  head_.reset_parameters(rng);
}

template <typename T>
Matrix<T> QNetwork<T>::forward_q(const Matrix<T>& x) {
  if (x.cols() != config_.encoder.input.size()) throw std::invalid_argument("QNetwork: observation shape mismatch");
  features_ = encoder_.forward(x);
  return head_.forward(features_);
}

template <typename T>
void QNetwork<T>::backward_q(const Matrix<T>& grad_q) {
  encoder_.backward(head_.backward(grad_q));
}

template <typename T>
std::vector<const nn::Layer<T>*> QNetwork<T>::relevance_path() const {
  std::vector<const nn::Layer<T>*> out;
  append_layers(out, encoder_);
  append_layers(out, head_);
  return out;
}

template <typename T>
std::vector<nn::Parameter<T>*> QNetwork<T>::parameters() {
  auto out = encoder_.parameters();
  append_params(out, head_.parameters());
  return out;
}

// ---------------------------------------------------------------- ActorCritic

namespace {

template <typename T>
nn::Sequential<T> mlp_torso(const NetConfig& config) {
  nn::Sequential<T> torso;
  torso.template emplace<nn::Linear<T>>(encoder_output_shape(config.encoder).size(), config.hidden);
  torso.template emplace<nn::ReLU<T>>(config.hidden);
  return torso;
}

template <typename T>
nn::Sequential<T> transformer_torso(const NetConfig& config) {
  const Shape3 f = encoder_output_shape(config.encoder);
  const nn::Index tokens = f.spatial();
  nn::Sequential<T> torso;
  torso.template emplace<nn::Linear<T>>(f.channels, config.embed_dim, tokens);
  torso.template emplace<nn::PositionalEmbedding<T>>(tokens, config.embed_dim);
  for (int l = 0; l < config.layers; ++l) {
    torso.template emplace<nn::TransformerEncoderLayer<T>>(config.embed_dim, config.heads, tokens, config.ffn_dim);
  }
  torso.template emplace<nn::TokenMean<T>>(tokens, config.embed_dim);
  return torso;
}

}  // namespace

template <typename T>
ActorCritic<T>::ActorCritic(const NetConfig& config, Rng& rng)
    : ActorCritic(config, mlp_torso<T>(config), config.hidden, rng, TorsoTag{}) {}

template <typename T>
ActorCritic<T>::ActorCritic(const NetConfig& config, nn::Sequential<T> torso, nn::Index torso_width, Rng& rng,
                            TorsoTag)
    : config_(config),
      feature_shape_(encoder_output_shape(config.encoder)),
      encoder_(make_conv_encoder<T>(config.encoder)),
      torso_(std::move(torso)),
      actor_(torso_width, config.num_actions),
      critic_(torso_width, 1) {
  encoder_.reset_parameters(rng);
  torso_.reset_parameters(rng);
  actor_.reset_parameters(rng);
  actor_.scale_weights(T(0.01) / std::sqrt(T(2)));
  critic_.reset_parameters(rng);
  critic_.scale_weights(T(1) / std::sqrt(T(2)));
}

template <typename T>
PolicyOutput<T> ActorCritic<T>::forward_policy(const Matrix<T>& x) {
  if (x.cols() != config_.encoder.input.size()) throw std::invalid_argument("ActorCritic: observation shape mismatch");
  return forward_from_features(encoder_.forward(x));
}

template <typename T>
PolicyOutput<T> ActorCritic<T>::forward_from_features(const Matrix<T>& features) {
  features_ = features;
  Matrix<T> h = torso_.forward(features_);
  return {actor_.forward(h), critic_.forward(h)};
}

template <typename T>
void ActorCritic<T>::backward_policy(const Matrix<T>& grad_logits, const Matrix<T>& grad_values) {
  Matrix<T> gh = actor_.backward(grad_logits) + critic_.backward(grad_values);
  encoder_.backward(torso_.backward(gh));
}

template <typename T>
Matrix<T> ActorCritic<T>::feature_gradient(const Matrix<T>& grad_scores) {
  return torso_.backward(actor_.backward(grad_scores));
}

template <typename T>
std::vector<const nn::Layer<T>*> ActorCritic<T>::relevance_path() const {
  std::vector<const nn::Layer<T>*> out;
  append_layers(out, encoder_);
  append_layers(out, torso_);
  out.push_back(&actor_);
  return out;
}

template <typename T>
std::vector<nn::Parameter<T>*> ActorCritic<T>::parameters() {
  auto out = encoder_.parameters();
  append_params(out, torso_.parameters());
  append_params(out, actor_.parameters());
  append_params(out, critic_.parameters());
  return out;
}

// ---------------------------------------------------------------- TransformerPolicy

template <typename T>
TransformerPolicy<T>::TransformerPolicy(const NetConfig& config, Rng& rng)
    : ActorCritic<T>(config, transformer_torso<T>(config), config.embed_dim, rng, typename ActorCritic<T>::TorsoTag{}) {}

template <typename T>
std::vector<nn::TransformerEncoderLayer<T>*> TransformerPolicy<T>::blocks() {
  std::vector<nn::TransformerEncoderLayer<T>*> out;
  for (std::size_t i = 0; i < this->torso_.size(); ++i) {
    if (auto* b = dynamic_cast<nn::TransformerEncoderLayer<T>*>(&this->torso_[i])) out.push_back(b);
  }
  return out;
}

template <typename T>
std::vector<std::vector<Matrix<T>>> TransformerPolicy<T>::attention_maps(const Matrix<T>& single_input) {
  if (single_input.rows() != 1) throw std::invalid_argument("attention_maps: expects a single observation");
  this->forward_policy(single_input);
  std::vector<std::vector<Matrix<T>>> maps;
  for (auto* b : blocks()) {
    std::vector<Matrix<T>> per_head;
    for (nn::Index h = 0; h < b->attention().heads(); ++h) per_head.push_back(b->attention().attention(0, h));
    maps.push_back(std::move(per_head));
  }
  return maps;
}

template <typename T>
void TransformerPolicy<T>::set_uniform_attention(bool on) {
  for (auto* b : blocks()) b->attention().force_uniform(on);
}

template <typename T>
nn::PositionalEmbedding<T>& TransformerPolicy<T>::positional_embedding() {
  for (std::size_t i = 0; i < this->torso_.size(); ++i) {
    if (auto* p = dynamic_cast<nn::PositionalEmbedding<T>*>(&this->torso_[i])) return *p;
  }
  throw std::logic_error("TransformerPolicy: no positional embedding");
}

// ---------------------------------------------------------------- softmax

template <typename T>
Matrix<T> log_softmax_rows(const Matrix<T>& logits) {
  Matrix<T> out(logits.rows(), logits.cols());
  for (nn::Index r = 0; r < logits.rows(); ++r) {
    const T m = logits.row(r).maxCoeff();
    const T lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits) {
  return log_softmax_rows(logits).array().exp().matrix();
}

#define URL_LENS_INSTANTIATE(T)                                  \
  template class QNetwork<T>;                                    \
  template class ActorCritic<T>;                                 \
  template class TransformerPolicy<T>;                           \
  template Matrix<T> softmax_rows<T>(const Matrix<T>&);          \
  template Matrix<T> log_softmax_rows<T>(const Matrix<T>&);

URL_LENS_INSTANTIATE(float)
URL_LENS_INSTANTIATE(double)

#undef URL_LENS_INSTANTIATE

}  // namespace url_lens::modelzoo
