#pragma once

// Minimal dense NHWC tensor for the denoiser stack. Channel index is the
// fastest-varying one, which keeps the conv inner loops contiguous.

#include <cstddef>
#include <vector>

#include "lisce/errors.hpp"
#include "lisce/types.hpp"

namespace lisce::cnn {

template <typename T>
struct Tensor4 {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<T> v;

  Tensor4() = default;
  Tensor4(int n_, int h_, int w_, int c_)
      : n(n_), h(h_), w(w_), c(c_),
        v(static_cast<std::size_t>(n_) * h_ * w_ * c_, T(0)) {}

  std::size_t size() const { return v.size(); }

  T& operator()(int b, int i, int j, int ch) {
    return v[((static_cast<std::size_t>(b) * h + i) * w + j) * c + ch];
  }
  const T& operator()(int b, int i, int j, int ch) const {
    return v[((static_cast<std::size_t>(b) * h + i) * w + j) * c + ch];
  }

  bool same_shape(const Tensor4& o) const {
    return n == o.n && h == o.h && w == o.w && c == o.c;
  }
};

// Stacked estimate vector -> (1, M, K+1, 2) image, channel 0 real and
// channel 1 imaginary; column k holds block k of the vector.
template <typename T>
Tensor4<T> to_image(const cxvec& z, int M) {
  if (M < 1 || z.size() % M != 0) throw NumericalError("to_image: length not a multiple of M");
  const int cols = static_cast<int>(z.size()) / M;
  Tensor4<T> img(1, M, cols, 2);
  for (int k = 0; k < cols; ++k)
    for (int m = 0; m < M; ++m) {
      img(0, m, k, 0) = static_cast<T>(z[k * M + m].real());
      img(0, m, k, 1) = static_cast<T>(z[k * M + m].imag());
    }
  return img;
}

template <typename T>
cxvec from_image(const Tensor4<T>& img, int b = 0) {
  if (img.c != 2) throw NumericalError("from_image: expected 2 channels");
  cxvec z(static_cast<Eigen::Index>(img.h) * img.w);
  for (int k = 0; k < img.w; ++k)
    for (int m = 0; m < img.h; ++m)
      z[k * img.h + m] = cxd(static_cast<double>(img(b, m, k, 0)),
                             static_cast<double>(img(b, m, k, 1)));
  return z;
}

}  // namespace lisce::cnn
