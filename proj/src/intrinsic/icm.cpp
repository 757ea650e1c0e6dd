#include "url_lens/intrinsic/icm.hpp"

#include <stdexcept>

#include "url_lens/modelzoo/networks.hpp"

namespace url_lens::intrinsic {

template <typename T>
IcmModule<T>::IcmModule(const IcmConfig& config, Rng& rng) : config_(config), phi_(modelzoo::make_conv_encoder<T>(config.encoder)) {
  if (!(config.beta > 0.0)) throw std::invalid_argument("IcmModule: beta must be positive");
  const auto f = modelzoo::encoder_output_shape(config.encoder).size();
  phi_.template emplace<nn::Linear<T>>(f, config.embedding);
  inverse_.template emplace<nn::Linear<T>>(2 * config.embedding, config.hidden);
  inverse_.template emplace<nn::ReLU<T>>(config.hidden);
  inverse_.template emplace<nn::Linear<T>>(config.hidden, config.num_actions);
  forward_.template emplace<nn::Linear<T>>(config.embedding + config.num_actions, config.hidden);
  forward_.template emplace<nn::ReLU<T>>(config.hidden);
  forward_.template emplace<nn::Linear<T>>(config.hidden, config.embedding);
  phi_.reset_parameters(rng);
  inverse_.reset_parameters(rng);
  forward_.reset_parameters(rng);
}

template <typename T>
Matrix<T> IcmModule<T>::forward_input(const Matrix<T>& phi, std::span<const int> actions) const {
  if (static_cast<nn::Index>(actions.size()) != phi.rows()) throw std::invalid_argument("ICM: one action per row required");
  Matrix<T> in = Matrix<T>::Zero(phi.rows(), config_.embedding + config_.num_actions);
  in.leftCols(config_.embedding) = phi;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= config_.num_actions) {
      throw std::invalid_argument("ICM: unknown action index " + std::to_string(actions[i]));
    }
    in(static_cast<nn::Index>(i), config_.embedding + actions[i]) = T(1);
  }
  return in;
}

template <typename T>
Matrix<T> IcmModule<T>::predict_next(const Matrix<T>& phi, std::span<const int> actions) {
  return forward_.forward(forward_input(phi, actions));
}

template <typename T>
Matrix<T> IcmModule<T>::inverse_logits(const Matrix<T>& phi, const Matrix<T>& phi_next) {
  Matrix<T> in(phi.rows(), 2 * config_.embedding);
  in << phi, phi_next;
  return inverse_.forward(in);
}

template <typename T>
std::vector<double> IcmModule<T>::rewards(const Matrix<T>& obs, std::span<const int> actions, const Matrix<T>& next_obs) {
  const Matrix<T> phi = embed(obs);
  const Matrix<T> phi_next = embed(next_obs);
  const Matrix<T> pred = predict_next(phi, actions);
  std::vector<double> r(static_cast<std::size_t>(obs.rows()));
  for (nn::Index i = 0; i < obs.rows(); ++i) {
    r[static_cast<std::size_t>(i)] = 0.5 * config_.beta * static_cast<double>((pred.row(i) - phi_next.row(i)).squaredNorm());
  }
  return r;
}

template <typename T>
IcmLosses IcmModule<T>::loss_and_backward(const Matrix<T>& obs, std::span<const int> actions, const Matrix<T>& next_obs,
                                          const Matrix<T>* fixed_target) {
  const nn::Index B = obs.rows();
  if (B == 0) throw std::invalid_argument("ICM: empty batch");
  const nn::Index E = config_.embedding;
  Matrix<T> both(2 * B, obs.cols());
  both << obs, next_obs;
  const Matrix<T> phi_all = phi_.forward(both);
  const Matrix<T> phi = phi_all.topRows(B);
  const Matrix<T> phi_next = phi_all.bottomRows(B);

  // inverse dynamics
  const Matrix<T> logits = inverse_logits(phi, phi_next);
  const Matrix<T> logp = modelzoo::log_softmax_rows(logits);
  Matrix<T> dlogits = logp.array().exp().matrix();
  double l_inv = 0.0;
  for (nn::Index i = 0; i < B; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= config_.num_actions) throw std::invalid_argument("ICM: unknown action index " + std::to_string(a));
    l_inv -= static_cast<double>(logp(i, a));
    dlogits(i, a) -= T(1);
  }
  l_inv /= static_cast<double>(B);
  dlogits /= static_cast<T>(B);
  const Matrix<T> dinv = inverse_.backward(dlogits);

  // forward dynamics
  const Matrix<T> pred = predict_next(phi, actions);
  const Matrix<T>& target = fixed_target ? *fixed_target : phi_next;
  const Matrix<T> diff = pred - target;
  const double l_fwd = 0.5 * static_cast<double>(diff.squaredNorm()) / static_cast<double>(B);
  const Matrix<T> dpred = diff * static_cast<T>(config_.beta / static_cast<double>(B));
  const Matrix<T> dfwd = forward_.backward(dpred);

  Matrix<T> dphi(2 * B, E);
  dphi.topRows(B) = dinv.leftCols(E) + dfwd.leftCols(E);
  dphi.bottomRows(B) = dinv.rightCols(E);
  phi_.backward(dphi);
  return {l_inv + config_.beta * l_fwd, l_inv, l_fwd};
}

template <typename T>
std::vector<nn::Parameter<T>*> IcmModule<T>::parameters() {
  auto out = phi_.parameters();
  for (auto* p : inverse_.parameters()) out.push_back(p);
  for (auto* p : forward_.parameters()) out.push_back(p);
  return out;
}

template <typename T>
IcmLosses icm_update(IcmModule<T>& module, nn::Adam<T>& optimizer, const Matrix<T>& obs, std::span<const int> actions,
                     const Matrix<T>& next_obs) {
  optimizer.zero_grad();
  const IcmLosses l = module.loss_and_backward(obs, actions, next_obs);
  optimizer.step();
  return l;
}

template class IcmModule<float>;
template class IcmModule<double>;
template IcmLosses icm_update<float>(IcmModule<float>&, nn::Adam<float>&, const Matrix<float>&, std::span<const int>,
                                     const Matrix<float>&);
template IcmLosses icm_update<double>(IcmModule<double>&, nn::Adam<double>&, const Matrix<double>&,
                                      std::span<const int>, const Matrix<double>&);

}  // namespace url_lens::intrinsic
