#include "url_lens/nn/adam.hpp"

#include <cmath>

namespace url_lens::nn {

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (auto* p : params_) {
    m_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  nn::zero_grad(params_);
}

template <typename T>
double global_grad_norm(const std::vector<Parameter<T>*>& params) {
  double sq = 0.0;
  for (const auto* p : params) sq += static_cast<double>(p->grad.squaredNorm());
  return std::sqrt(sq);
}

template <typename T>
double Adam<T>::step() {
  const double norm = global_grad_norm(params_);
  T clip = T(1);
  if (options_.max_grad_norm > 0.0 && norm > options_.max_grad_norm) {
    clip = static_cast<T>(options_.max_grad_norm / (norm + 1e-6));
  }
  ++t_;
  const T b1 = static_cast<T>(options_.beta1), b2 = static_cast<T>(options_.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(options_.beta1, static_cast<double>(t_)));
  const T c2 = static_cast<T>(1.0 - std::pow(options_.beta2, static_cast<double>(t_)));
  const T lr = static_cast<T>(options_.learning_rate);
  const T eps = static_cast<T>(options_.epsilon);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    auto g = (p.grad.array() * clip);
    m_[i].array() = b1 * m_[i].array() + (T(1) - b1) * g;
    v_[i].array() = b2 * v_[i].array() + (T(1) - b2) * g.square();
    p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
  }
  return norm;
}

template class Adam<float>;
template class Adam<double>;
template double global_grad_norm<float>(const std::vector<Parameter<float>*>&);
template double global_grad_norm<double>(const std::vector<Parameter<double>*>&);

}  // namespace url_lens::nn
