#include "url_lens/modelzoo/encoder.hpp"

#include <stdexcept>

namespace url_lens::modelzoo {

Shape3 encoder_output_shape(const EncoderConfig& config) {
  Shape3 s = config.input;
  for (const auto& st : config.stages) s = nn::ConvGeometry{s, st.channels, st.kernel, st.stride, st.pad}.output();
  return s;
}

template <typename T>
nn::Sequential<T> make_conv_encoder(const EncoderConfig& config) {
  if (config.stages.empty()) throw std::invalid_argument("make_conv_encoder: no stages");
  nn::Sequential<T> seq;
  Shape3 s = config.input;
  bool first = true;
  for (const auto& st : config.stages) {
    auto& conv = seq.template emplace<nn::Conv2d<T>>(nn::ConvGeometry{s, st.channels, st.kernel, st.stride, st.pad});
    if (first) conv.set_input_grad(false);
    first = false;
    s = conv.output_shape();
    seq.template emplace<nn::ReLU<T>>(s.size());
  }
  return seq;
}

template <typename T>
Matrix<T> observations_to_input(std::span<const procenv::Observation> observations) {
  Matrix<T> x(static_cast<nn::Index>(observations.size()), static_cast<nn::Index>(procenv::kObservationBytes));
  for (std::size_t i = 0; i < observations.size(); ++i) {
    T* row = x.row(static_cast<nn::Index>(i)).data();
    const auto& px = observations[i].pixels;
    for (std::size_t j = 0; j < px.size(); ++j) row[j] = static_cast<T>(px[j]) / T(255);
  }
  return x;
}

template nn::Sequential<float> make_conv_encoder<float>(const EncoderConfig&);
template nn::Sequential<double> make_conv_encoder<double>(const EncoderConfig&);
template Matrix<float> observations_to_input<float>(std::span<const procenv::Observation>);
template Matrix<double> observations_to_input<double>(std::span<const procenv::Observation>);

}  // namespace url_lens::modelzoo
