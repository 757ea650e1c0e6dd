#include "url_lens/attribution/lrp.hpp"

#include <stdexcept>
#include <string>

#include "url_lens/attribution/gradcam.hpp"

namespace url_lens::attribution {

namespace {

template <typename T>
nn::Matrix<T> seed_relevance(const nn::Matrix<T>& scores, int target, double* target_score) {
  if (scores.rows() != 1) throw std::invalid_argument("lrp: expects a single input row");
  if (target < 0 || target >= scores.cols()) throw std::out_of_range("lrp: target index " + std::to_string(target));
  nn::Matrix<T> r = nn::Matrix<T>::Zero(1, scores.cols());
  r(0, target) = scores(0, target);
  if (target_score) *target_score = static_cast<double>(scores(0, target));
  return r;
}

}  // namespace

template <typename T>
nn::Matrix<T> lrp_through(std::span<nn::Layer<T>* const> layers, const nn::Matrix<T>& input, int target, T epsilon,
                          double* target_score) {
  nn::Matrix<T> x = input;
  for (auto* layer : layers) x = layer->forward(x);
  nn::Matrix<T> r = seed_relevance(x, target, target_score);
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) r = (*it)->relevance(r, epsilon);
  return r;
}

template <typename T>
LrpResult lrp(modelzoo::AttributableNet<T>& net, const nn::Matrix<T>& input, std::optional<int> target,
              double epsilon) {
  const nn::Matrix<T> scores = net.scores(input);
  const int t = target.value_or(argmax_row(scores));
  LrpResult out;
  nn::Matrix<T> r = seed_relevance(scores, t, &out.target_score);
  const auto path = net.relevance_path();
  for (auto it = path.rbegin(); it != path.rend(); ++it) r = (*it)->relevance(r, static_cast<T>(epsilon));

  const nn::Shape3 in = net.input_shape();
  if (r.cols() != in.size()) throw std::logic_error("lrp: relevance size does not match the input");
  out.input.resize(static_cast<std::size_t>(r.cols()));
  for (nn::Index i = 0; i < r.cols(); ++i) out.input[static_cast<std::size_t>(i)] = static_cast<double>(r(0, i));
  out.pixel.assign(static_cast<std::size_t>(in.spatial()), 0.0);
  for (std::size_t p = 0; p < out.pixel.size(); ++p) {
    for (int c = 0; c < in.channels; ++c) out.pixel[p] += out.input[p * static_cast<std::size_t>(in.channels) + c];
  }
  out.map.method = Method::lrp;
  out.map.height = in.height;
  out.map.width = in.width;
  out.map.values = max_normalize(out.pixel);
  return out;
}

template nn::Matrix<float> lrp_through<float>(std::span<nn::Layer<float>* const>, const nn::Matrix<float>&, int, float,
                                              double*);
template nn::Matrix<double> lrp_through<double>(std::span<nn::Layer<double>* const>, const nn::Matrix<double>&, int,
                                                double, double*);
template LrpResult lrp<float>(modelzoo::AttributableNet<float>&, const nn::Matrix<float>&, std::optional<int>, double);
template LrpResult lrp<double>(modelzoo::AttributableNet<double>&, const nn::Matrix<double>&, std::optional<int>,
                               double);

}  // namespace url_lens::attribution
