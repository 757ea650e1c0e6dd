#pragma once

#include <Eigen/Dense>

namespace url_lens::nn {

using Index = Eigen::Index;

/// Activations are batch-major: one sample per row, features HWC-flattened.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using MatrixMap = Eigen::Map<Matrix<T>>;

template <typename T>
using ConstMatrixMap = Eigen::Map<const Matrix<T>>;

struct Shape3 {
  int height = 0;
  int width = 0;
  int channels = 0;

  int spatial() const { return height * width; }
  int size() const { return height * width * channels; }
  bool operator==(const Shape3&) const = default;
};

/// Output extent of a strided window: (in + 2*pad - kernel) / stride + 1.
inline int conv_out(int in, int kernel, int stride, int pad) { return (in + 2 * pad - kernel) / stride + 1; }

template <typename T>
T stabilizer(T z, T eps) {
  return z >= T(0) ? z + eps : z - eps;
}

}  // namespace url_lens::nn
