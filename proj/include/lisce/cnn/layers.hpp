#pragma once

// Conv/BN/ReLU primitives with analytic backward passes. All batch
// reductions run in fixed sample order so results are identical for any
// worker count; only per-sample work is parallelized.

#include <cmath>
#include <vector>

#include "lisce/cnn/tensor.hpp"
#include "lisce/errors.hpp"
#include "lisce/parallel.hpp"

namespace lisce::cnn {

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.9;

template <typename T>
struct ConvLayer {
  int c_in = 0, c_out = 0;
  bool has_bn = false;
  std::vector<T> kernel;  // [3][3][c_in][c_out], c_out fastest
  std::vector<T> bias;    // [c_out]
  std::vector<T> gamma, beta, run_mean, run_var;  // [c_out] when has_bn

  static ConvLayer make(int c_in, int c_out, bool bn) {
    ConvLayer l;
    l.c_in = c_in;
    l.c_out = c_out;
    l.has_bn = bn;
    l.kernel.assign(static_cast<std::size_t>(9) * c_in * c_out, T(0));
    l.bias.assign(c_out, T(0));
    if (bn) {
      l.gamma.assign(c_out, T(1));
      l.beta.assign(c_out, T(0));
      l.run_mean.assign(c_out, T(0));
      l.run_var.assign(c_out, T(1));
    }
    return l;
  }

  T& k_at(int di, int dj, int ci, int co) {
    return kernel[((static_cast<std::size_t>(di) * 3 + dj) * c_in + ci) * c_out + co];
  }
  const T& k_at(int di, int dj, int ci, int co) const {
    return kernel[((static_cast<std::size_t>(di) * 3 + dj) * c_in + ci) * c_out + co];
  }
};

// 3x3 convolution, stride 1, zero padding 1 (output same spatial size).
template <typename T>
Tensor4<T> conv2d_same(const Tensor4<T>& x, const ConvLayer<T>& l, int threads = 1) {
  if (x.c != l.c_in) throw NumericalError("conv2d_same: channel mismatch");
  Tensor4<T> out(x.n, x.h, x.w, l.c_out);
  parallel_for(static_cast<std::size_t>(x.n), threads, [&](std::size_t b) {
    std::vector<T> acc(l.c_out);
    for (int i = 0; i < x.h; ++i)
      for (int j = 0; j < x.w; ++j) {
        for (int o = 0; o < l.c_out; ++o) acc[o] = l.bias[o];
        for (int di = 0; di < 3; ++di) {
          const int si = i + di - 1;
          if (si < 0 || si >= x.h) continue;
          for (int dj = 0; dj < 3; ++dj) {
            const int sj = j + dj - 1;
            if (sj < 0 || sj >= x.w) continue;
            for (int ci = 0; ci < l.c_in; ++ci) {
              const T xv = x(static_cast<int>(b), si, sj, ci);
              const T* kp = &l.kernel[((static_cast<std::size_t>(di) * 3 + dj) * l.c_in + ci) *
                                      l.c_out];
              for (int o = 0; o < l.c_out; ++o) acc[o] += xv * kp[o];
            }
          }
        }
        for (int o = 0; o < l.c_out; ++o) out(static_cast<int>(b), i, j, o) = acc[o];
      }
  });
  return out;
}

// Backward for conv2d_same. Gradients w.r.t. kernel/bias are accumulated
// per sample and reduced in sample order.
template <typename T>
void conv2d_backward(const Tensor4<T>& dout, const Tensor4<T>& x, const ConvLayer<T>& l,
                     Tensor4<T>& dx, std::vector<T>& dkernel, std::vector<T>& dbias,
                     int threads = 1) {
  dx = Tensor4<T>(x.n, x.h, x.w, x.c);
  dkernel.assign(l.kernel.size(), T(0));
  dbias.assign(l.bias.size(), T(0));

  std::vector<std::vector<T>> dk_b(x.n), db_b(x.n);
  parallel_for(static_cast<std::size_t>(x.n), threads, [&](std::size_t bb) {
    const int b = static_cast<int>(bb);
    auto& dk = dk_b[bb];
    auto& db = db_b[bb];
    dk.assign(l.kernel.size(), T(0));
    db.assign(l.bias.size(), T(0));
    for (int i = 0; i < x.h; ++i)
      for (int j = 0; j < x.w; ++j) {
        const T* doutp = &dout.v[((static_cast<std::size_t>(b) * x.h + i) * x.w + j) * l.c_out];
        for (int o = 0; o < l.c_out; ++o) db[o] += doutp[o];
        for (int di = 0; di < 3; ++di) {
          const int si = i + di - 1;
          if (si < 0 || si >= x.h) continue;
          for (int dj = 0; dj < 3; ++dj) {
            const int sj = j + dj - 1;
            if (sj < 0 || sj >= x.w) continue;
            for (int ci = 0; ci < l.c_in; ++ci) {
              const T xv = x(b, si, sj, ci);
              T* dkp = &dk[((static_cast<std::size_t>(di) * 3 + dj) * l.c_in + ci) * l.c_out];
              T g = T(0);
              const T* kp = &l.kernel[((static_cast<std::size_t>(di) * 3 + dj) * l.c_in + ci) *
                                      l.c_out];
              for (int o = 0; o < l.c_out; ++o) {
                dkp[o] += xv * doutp[o];
                g += kp[o] * doutp[o];
              }
              dx(b, si, sj, ci) += g;
            }
          }
        }
      }
  });
  for (int b = 0; b < x.n; ++b) {
    for (std::size_t i = 0; i < dkernel.size(); ++i) dkernel[i] += dk_b[b][i];
    for (std::size_t i = 0; i < dbias.size(); ++i) dbias[i] += db_b[b][i];
  }
}

enum class Mode { train, infer };

template <typename T>
struct BnCache {
  std::vector<T> mean, var;  // batch statistics used in the forward pass
};

// Batch norm over (batch, height, width) per channel. Train mode uses batch
// statistics (biased variance) and updates the running ones in place.
template <typename T>
Tensor4<T> batch_norm(const Tensor4<T>& x, ConvLayer<T>& l, Mode mode,
                      BnCache<T>* cache = nullptr) {
  if (!l.has_bn) throw NumericalError("batch_norm: layer has no bn parameters");
  const int C = x.c;
  const std::size_t per_chan = static_cast<std::size_t>(x.n) * x.h * x.w;
  std::vector<T> mean(C, T(0)), var(C, T(0));
  if (mode == Mode::train) {
    for (int b = 0; b < x.n; ++b)
      for (int i = 0; i < x.h; ++i)
        for (int j = 0; j < x.w; ++j)
          for (int ch = 0; ch < C; ++ch) mean[ch] += x(b, i, j, ch);
    for (int ch = 0; ch < C; ++ch) mean[ch] /= static_cast<T>(per_chan);
    for (int b = 0; b < x.n; ++b)
      for (int i = 0; i < x.h; ++i)
        for (int j = 0; j < x.w; ++j)
          for (int ch = 0; ch < C; ++ch) {
            const T d = x(b, i, j, ch) - mean[ch];
            var[ch] += d * d;
          }
    for (int ch = 0; ch < C; ++ch) var[ch] /= static_cast<T>(per_chan);
    for (int ch = 0; ch < C; ++ch) {
      l.run_mean[ch] = static_cast<T>(kBnMomentum) * l.run_mean[ch] +
                       static_cast<T>(1.0 - kBnMomentum) * mean[ch];
      l.run_var[ch] = static_cast<T>(kBnMomentum) * l.run_var[ch] +
                      static_cast<T>(1.0 - kBnMomentum) * var[ch];
    }
  } else {
    mean = l.run_mean;
    var = l.run_var;
  }
  if (cache) {
    cache->mean = mean;
    cache->var = var;
  }
  Tensor4<T> out(x.n, x.h, x.w, C);
  std::vector<T> scale(C), shift(C);
  for (int ch = 0; ch < C; ++ch) {
    scale[ch] = l.gamma[ch] / std::sqrt(var[ch] + static_cast<T>(kBnEps));
    shift[ch] = l.beta[ch] - mean[ch] * scale[ch];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int ch = static_cast<int>(i % C);
    out.v[i] = x.v[i] * scale[ch] + shift[ch];
  }
  return out;
}

// Backward through train-mode batch norm (through the batch statistics).
template <typename T>
void batch_norm_backward(const Tensor4<T>& dout, const Tensor4<T>& x, const ConvLayer<T>& l,
                         const BnCache<T>& cache, Tensor4<T>& dx, std::vector<T>& dgamma,
                         std::vector<T>& dbeta) {
  const int C = x.c;
  const T n = static_cast<T>(static_cast<std::size_t>(x.n) * x.h * x.w);
  dgamma.assign(C, T(0));
  dbeta.assign(C, T(0));
  std::vector<T> inv_std(C), sum_dxhat(C, T(0)), sum_dxhat_xc(C, T(0));
  for (int ch = 0; ch < C; ++ch)
    inv_std[ch] = T(1) / std::sqrt(cache.var[ch] + static_cast<T>(kBnEps));

  for (std::size_t i = 0; i < x.size(); ++i) {
    const int ch = static_cast<int>(i % C);
    const T xc = x.v[i] - cache.mean[ch];
    const T xhat = xc * inv_std[ch];
    dgamma[ch] += dout.v[i] * xhat;
    dbeta[ch] += dout.v[i];
    const T dxhat = dout.v[i] * l.gamma[ch];
    sum_dxhat[ch] += dxhat;
    sum_dxhat_xc[ch] += dxhat * xc;
  }
  dx = Tensor4<T>(x.n, x.h, x.w, C);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int ch = static_cast<int>(i % C);
    const T xc = x.v[i] - cache.mean[ch];
    const T dxhat = dout.v[i] * l.gamma[ch];
    // d/dx of (x - mu)/sqrt(var + eps) through mu and var as well
    dx.v[i] = inv_std[ch] * (dxhat - sum_dxhat[ch] / n -
                             xc * inv_std[ch] * inv_std[ch] * sum_dxhat_xc[ch] / n);
  }
}

template <typename T>
void relu_inplace(Tensor4<T>& x) {
  for (auto& v : x.v)
    if (v < T(0)) v = T(0);
}

template <typename T>
void relu_backward_inplace(Tensor4<T>& d, const Tensor4<T>& pre_act) {
  for (std::size_t i = 0; i < d.v.size(); ++i)
    if (pre_act.v[i] <= T(0)) d.v[i] = T(0);
}

}  // namespace lisce::cnn
