#include "url_lens/attribution/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace url_lens::attribution {

std::string_view method_name(Method m) { return m == Method::gradcam ? "gradcam" : "lrp"; }

Method parse_method(std::string_view name) {
  if (name == "gradcam") return Method::gradcam;
  if (name == "lrp") return Method::lrp;
  throw std::invalid_argument("unknown attribution method '" + std::string(name) + "'");
}

std::vector<double> max_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, v);
  if (!(peak > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::max(0.0, values[i]) / peak;
  return out;
}

std::vector<double> upsample_bilinear(std::span<const double> src, int src_h, int src_w, int dst_h, int dst_w) {
  if (static_cast<std::size_t>(src_h) * src_w != src.size()) {
    throw std::invalid_argument("upsample_bilinear: size mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(dst_h) * dst_w);
  auto coord = [](int d, int src_n, int dst_n, int& i0, int& i1, double& frac) {
    double s = (d + 0.5) * src_n / dst_n - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, src_n - 1);
    frac = s - i0;
  };
  for (int y = 0; y < dst_h; ++y) {
    int y0, y1;
    double fy;
    coord(y, src_h, dst_h, y0, y1, fy);
    for (int x = 0; x < dst_w; ++x) {
      int x0, x1;
      double fx;
      coord(x, src_w, dst_w, x0, x1, fx);
      auto s = [&](int yy, int xx) { return src[static_cast<std::size_t>(yy) * src_w + xx]; };
      const double top = s(y0, x0) * (1 - fx) + s(y0, x1) * fx;
      const double bottom = s(y1, x0) * (1 - fx) + s(y1, x1) * fx;
      out[static_cast<std::size_t>(y) * dst_w + x] = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

void check_saliency(const SaliencyMap& map) {
  if (map.values.size() != static_cast<std::size_t>(map.height) * map.width) {
    throw std::logic_error("saliency map: size mismatch");
  }
  double peak = 0.0;
  for (double v : map.values) {
    if (!(v >= 0.0)) throw std::logic_error("saliency map: negative or non-finite entry");
    peak = std::max(peak, v);
  }
  if (peak != 0.0 && std::abs(peak - 1.0) > 1e-12) throw std::logic_error("saliency map: not max-normalized");
}

std::vector<double> grad_cam_coarse(std::span<const double> activations, std::span<const double> gradients,
                                    nn::Shape3 shape) {
  const auto n = static_cast<std::size_t>(shape.size());
  if (activations.size() != n || gradients.size() != n) throw std::invalid_argument("grad_cam: shape mismatch");
  const auto hw = static_cast<std::size_t>(shape.spatial());
  const auto c = static_cast<std::size_t>(shape.channels);
  std::vector<double> alpha(c, 0.0);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t k = 0; k < c; ++k) alpha[k] += gradients[p * c + k];
  }
  for (double& a : alpha) a /= static_cast<double>(hw);
  std::vector<double> map(hw, 0.0);
  for (std::size_t p = 0; p < hw; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) s += alpha[k] * activations[p * c + k];
    map[p] = std::max(0.0, s);
  }
  return map;
}

template <typename T>
int argmax_row(const nn::Matrix<T>& scores, nn::Index row) {
  nn::Index best = 0;
  scores.row(row).maxCoeff(&best);
  return static_cast<int>(best);
}

template <typename T>
SaliencyMap grad_cam(modelzoo::AttributableNet<T>& net, const nn::Matrix<T>& input, std::optional<int> target) {
  if (input.rows() != 1) throw std::invalid_argument("grad_cam: expects a single input row");
  const nn::Matrix<T> scores = net.scores(input);
  const int t = target.value_or(argmax_row(scores));
  if (t < 0 || t >= scores.cols()) throw std::out_of_range("grad_cam: target index " + std::to_string(t));
  nn::Matrix<T> seed = nn::Matrix<T>::Zero(1, scores.cols());
  seed(0, t) = T(1);
  const nn::Matrix<T> grad = net.feature_gradient(seed);
  const nn::Matrix<T>& act = net.feature_map();
  const auto n = static_cast<std::size_t>(act.cols());
  std::vector<double> a(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = static_cast<double>(act(0, static_cast<nn::Index>(i)));
    g[i] = static_cast<double>(grad(0, static_cast<nn::Index>(i)));
  }
  const nn::Shape3 fs = net.feature_shape();
  const nn::Shape3 in = net.input_shape();
  const auto coarse = grad_cam_coarse(a, g, fs);
  SaliencyMap map;
  map.method = Method::gradcam;
  map.height = in.height;
  map.width = in.width;
  map.values = max_normalize(upsample_bilinear(coarse, fs.height, fs.width, in.height, in.width));
  return map;
}

template int argmax_row<float>(const nn::Matrix<float>&, nn::Index);
template int argmax_row<double>(const nn::Matrix<double>&, nn::Index);
template SaliencyMap grad_cam<float>(modelzoo::AttributableNet<float>&, const nn::Matrix<float>&, std::optional<int>);
template SaliencyMap grad_cam<double>(modelzoo::AttributableNet<double>&, const nn::Matrix<double>&,
                                      std::optional<int>);

}  // namespace url_lens::attribution
