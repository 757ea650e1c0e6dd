#include "url_lens/intrinsic/rnd.hpp"

#include <stdexcept>

namespace url_lens::intrinsic {

namespace {

template <typename T>
nn::Sequential<T> embedding_net(const RndConfig& config) {
  auto seq = modelzoo::make_conv_encoder<T>(config.encoder);
  seq.template emplace<nn::Linear<T>>(modelzoo::encoder_output_shape(config.encoder).size(), config.embedding);
  return seq;
}

}  // namespace

template <typename T>
RndModule<T>::RndModule(const RndConfig& config, Rng& rng)
    : config_(config), target_(embedding_net<T>(config)), predictor_(embedding_net<T>(config)) {
  target_.reset_parameters(rng);
  predictor_.reset_parameters(rng);
}

template <typename T>
std::vector<double> RndModule<T>::rewards(const Matrix<T>& obs) {
  const Matrix<T> diff = predictor_.forward(obs) - target_.forward(obs);
  std::vector<double> r(static_cast<std::size_t>(obs.rows()));
  for (nn::Index i = 0; i < obs.rows(); ++i) r[static_cast<std::size_t>(i)] = static_cast<double>(diff.row(i).squaredNorm());
  return r;
}

template <typename T>
double RndModule<T>::loss_and_backward(const Matrix<T>& obs) {
  const nn::Index B = obs.rows();
  if (B == 0) throw std::invalid_argument("RND: empty batch");
  const Matrix<T> target = target_.forward(obs);
  const Matrix<T> diff = predictor_.forward(obs) - target;
  predictor_.backward(diff * static_cast<T>(2.0 / static_cast<double>(B)));
  return static_cast<double>(diff.squaredNorm()) / static_cast<double>(B);
}

template <typename T>
std::uint64_t RndModule<T>::target_hash() {
  return nn::parameter_hash(target_.parameters());
}

template <typename T>
void RndModule<T>::copy_target_into_predictor() {
  nn::copy_values(target_.parameters(), predictor_.parameters());
}

template <typename T>
double rnd_update(RndModule<T>& module, nn::Adam<T>& optimizer, const Matrix<T>& obs) {
  const std::uint64_t before = module.target_hash();
  optimizer.zero_grad();
  const double loss = module.loss_and_backward(obs);
  optimizer.step();
  if (module.target_hash() != before) throw FrozenTargetViolation("RND target parameters changed during an update");
  return loss;
}

template class RndModule<float>;
template class RndModule<double>;
template double rnd_update<float>(RndModule<float>&, nn::Adam<float>&, const Matrix<float>&);
template double rnd_update<double>(RndModule<double>&, nn::Adam<double>&, const Matrix<double>&);

}  // namespace url_lens::intrinsic
