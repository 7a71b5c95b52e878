#pragma once

// Residual denoising networks over channel images. Both architectures share
// the conv stack pattern (conv+relu, D-2 x conv+bn+relu, conv) and predict
// the noise, which is subtracted from the input. FFDNet additionally works
// on a 2x2-subsampled image with an appended noise-level map.

#include <cstdint>
#include <vector>

#include "lisce/cnn/layers.hpp"
#include "lisce/cnn/tensor.hpp"
#include "lisce/rng.hpp"

namespace lisce::cnn {

enum class Arch : std::uint8_t { dncnn = 0, ffdnet = 1 };

inline const char* arch_name(Arch a) { return a == Arch::dncnn ? "dncnn" : "ffdnet"; }
inline int input_channels(Arch a) { return a == Arch::dncnn ? 2 : 5; }
inline int output_channels(Arch a) { return a == Arch::dncnn ? 2 : 4; }

template <typename T>
struct Network {
  Arch arch = Arch::dncnn;
  int depth = 0;  // number of conv layers
  int n_f = 0;    // hidden width
  int m = 0;      // antennas the net was built for
  int k = 0;      // surface elements the net was built for
  std::vector<ConvLayer<T>> layers;
};

template <typename T>
Network<T> make_network(Arch arch, int depth, int n_f, int M, int K) {
  if (depth < 2) throw NumericalError("make_network: depth must be >= 2");
  if (n_f < 1) throw NumericalError("make_network: n_f must be >= 1");
  if (arch == Arch::ffdnet && M % 2 != 0)
    throw OddAntennaCount("make_network: ffdnet needs an even antenna count");
  Network<T> net;
  net.arch = arch;
  net.depth = depth;
  net.n_f = n_f;
  net.m = M;
  net.k = K;
  net.layers.reserve(depth);
  for (int l = 0; l < depth; ++l) {
    const int ci = (l == 0) ? input_channels(arch) : n_f;
    const int co = (l == depth - 1) ? output_channels(arch) : n_f;
    const bool bn = (l > 0 && l < depth - 1);
    net.layers.push_back(ConvLayer<T>::make(ci, co, bn));
  }
  return net;
}

// Kernel entries ~ N(0, 2/(9 c_in)), biases zero, bn at identity. The final
// conv starts at zero, so the untrained network is the identity denoiser;
// a randomly initialized residual output would first have to be unlearned,
// and with narrow hidden widths that phase degrades the features it passes
// through badly enough that training stalls at the identity level.
template <typename T>
void init_weights(Network<T>& net, RngStream& rng) {
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    auto& l = net.layers[li];
    if (li + 1 == net.layers.size()) {
      std::fill(l.kernel.begin(), l.kernel.end(), T(0));
    } else {
      const double stddev = std::sqrt(2.0 / (9.0 * l.c_in));
      for (auto& w : l.kernel) w = static_cast<T>(stddev * rng.normal());
    }
    for (auto& b : l.bias) b = T(0);
    if (l.has_bn) {
      std::fill(l.gamma.begin(), l.gamma.end(), T(1));
      std::fill(l.beta.begin(), l.beta.end(), T(0));
      std::fill(l.run_mean.begin(), l.run_mean.end(), T(0));
      std::fill(l.run_var.begin(), l.run_var.end(), T(1));
    }
  }
}

template <typename T>
Network<T> zeros_like(const Network<T>& net) {
  Network<T> z = net;
  for (auto& l : z.layers) {
    std::fill(l.kernel.begin(), l.kernel.end(), T(0));
    std::fill(l.bias.begin(), l.bias.end(), T(0));
    if (l.has_bn) {
      std::fill(l.gamma.begin(), l.gamma.end(), T(0));
      std::fill(l.beta.begin(), l.beta.end(), T(0));
      std::fill(l.run_mean.begin(), l.run_mean.end(), T(0));
      std::fill(l.run_var.begin(), l.run_var.end(), T(0));
    }
  }
  return z;
}

// Rows 2r/2r+1 interleave into four channels (Re-even, Re-odd, Im-even,
// Im-odd); spatial height halves.
template <typename T>
Tensor4<T> interleave4(const Tensor4<T>& img) {
  if (img.c != 2) throw NumericalError("interleave4: expected 2 channels");
  if (img.h % 2 != 0) throw OddAntennaCount("interleave4: image height must be even");
  Tensor4<T> out(img.n, img.h / 2, img.w, 4);
  for (int b = 0; b < img.n; ++b)
    for (int r = 0; r < img.h / 2; ++r)
      for (int j = 0; j < img.w; ++j) {
        out(b, r, j, 0) = img(b, 2 * r, j, 0);
        out(b, r, j, 1) = img(b, 2 * r + 1, j, 0);
        out(b, r, j, 2) = img(b, 2 * r, j, 1);
        out(b, r, j, 3) = img(b, 2 * r + 1, j, 1);
      }
  return out;
}

template <typename T>
Tensor4<T> deinterleave4(const Tensor4<T>& x) {
  if (x.c != 4) throw NumericalError("deinterleave4: expected 4 channels");
  Tensor4<T> out(x.n, x.h * 2, x.w, 2);
  for (int b = 0; b < x.n; ++b)
    for (int r = 0; r < x.h; ++r)
      for (int j = 0; j < x.w; ++j) {
        out(b, 2 * r, j, 0) = x(b, r, j, 0);
        out(b, 2 * r + 1, j, 0) = x(b, r, j, 1);
        out(b, 2 * r, j, 1) = x(b, r, j, 2);
        out(b, 2 * r + 1, j, 1) = x(b, r, j, 3);
      }
  return out;
}

// FFDNet input: interleaved data channels plus a constant noise map holding
// the per-real-component standard deviation of the LS estimation noise,
// sigma / sqrt(2 T_p).
template <typename T>
Tensor4<T> ffdnet_pack(const Tensor4<T>& img, const std::vector<T>& sigma, int t_p) {
  if (static_cast<int>(sigma.size()) != img.n)
    throw NumericalError("ffdnet_pack: need one sigma per sample");
  if (t_p < 1) throw NumericalError("ffdnet_pack: T_p must be >= 1");
  const Tensor4<T> data = interleave4(img);
  Tensor4<T> out(img.n, data.h, data.w, 5);
  for (int b = 0; b < img.n; ++b) {
    const T level = static_cast<T>(sigma[b] / std::sqrt(2.0 * t_p));
    for (int r = 0; r < data.h; ++r)
      for (int j = 0; j < data.w; ++j) {
        for (int ch = 0; ch < 4; ++ch) out(b, r, j, ch) = data(b, r, j, ch);
        out(b, r, j, 4) = level;
      }
  }
  return out;
}

template <typename T>
struct ForwardCache {
  std::vector<Tensor4<T>> conv_in;  // input of each conv layer
  std::vector<Tensor4<T>> pre_bn;   // conv output where bn follows
  std::vector<Tensor4<T>> pre_act;  // pre-relu activation per layer
  std::vector<BnCache<T>> bn;
};

// Runs the conv stack and returns the predicted noise. Train mode updates
// bn running statistics in place.
template <typename T>
Tensor4<T> run_stack(Network<T>& net, const Tensor4<T>& x0, Mode mode, ForwardCache<T>* cache,
                     int threads = 1) {
  const int L = net.depth;
  if (cache) {
    cache->conv_in.assign(L, Tensor4<T>());
    cache->pre_bn.assign(L, Tensor4<T>());
    cache->pre_act.assign(L, Tensor4<T>());
    cache->bn.assign(L, BnCache<T>());
  }
  Tensor4<T> a = x0;
  for (int l = 0; l < L; ++l) {
    if (cache) cache->conv_in[l] = a;
    Tensor4<T> t = conv2d_same(a, net.layers[l], threads);
    if (net.layers[l].has_bn) {
      if (cache) cache->pre_bn[l] = t;
      t = batch_norm(t, net.layers[l], mode, cache ? &cache->bn[l] : nullptr);
    }
    if (l < L - 1) {
      if (cache) cache->pre_act[l] = t;
      relu_inplace(t);
    }
    a = std::move(t);
  }
  return a;
}

template <typename T>
Tensor4<T> dncnn_forward(Network<T>& net, const Tensor4<T>& img, Mode mode,
                         ForwardCache<T>* cache = nullptr, int threads = 1) {
  if (net.arch != Arch::dncnn) throw NumericalError("dncnn_forward: wrong architecture");
  const Tensor4<T> r = run_stack(net, img, mode, cache, threads);
  Tensor4<T> out = img;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= r.v[i];
  return out;
}

template <typename T>
Tensor4<T> ffdnet_forward(Network<T>& net, const Tensor4<T>& img, const std::vector<T>& sigma,
                          int t_p, Mode mode, ForwardCache<T>* cache = nullptr,
                          int threads = 1) {
  if (net.arch != Arch::ffdnet) throw NumericalError("ffdnet_forward: wrong architecture");
  const Tensor4<T> packed = ffdnet_pack(img, sigma, t_p);
  const Tensor4<T> r = run_stack(net, packed, mode, cache, threads);
  Tensor4<T> den(img.n, packed.h, packed.w, 4);
  for (int b = 0; b < img.n; ++b)
    for (int i = 0; i < packed.h; ++i)
      for (int j = 0; j < packed.w; ++j)
        for (int ch = 0; ch < 4; ++ch)
          den(b, i, j, ch) = packed(b, i, j, ch) - r(b, i, j, ch);
  return deinterleave4(den);
}

// Backprop d(loss)/d(stack output) through the conv stack, accumulating
// parameter gradients into `grads` (zeros_like shape).
template <typename T>
void backward_stack(Network<T>& net, const ForwardCache<T>& cache, Tensor4<T> d,
                    Network<T>& grads, int threads = 1) {
  for (int l = net.depth - 1; l >= 0; --l) {
    if (l < net.depth - 1) relu_backward_inplace(d, cache.pre_act[l]);
    if (net.layers[l].has_bn) {
      Tensor4<T> dxb;
      batch_norm_backward(d, cache.pre_bn[l], net.layers[l], cache.bn[l], dxb,
                          grads.layers[l].gamma, grads.layers[l].beta);
      d = std::move(dxb);
    }
    Tensor4<T> dx;
    conv2d_backward(d, cache.conv_in[l], net.layers[l], dx, grads.layers[l].kernel,
                    grads.layers[l].bias, threads);
    d = std::move(dx);
  }
}

// Mean (over batch) squared Frobenius distance between the denoised output
// and the target, plus parameter gradients. Runs the stack in train mode.
template <typename T>
double loss_and_grads(Network<T>& net, const Tensor4<T>& inputs, const Tensor4<T>& targets,
                      const std::vector<T>* sigma, int t_p, Network<T>& grads,
                      int threads = 1) {
  if (!inputs.same_shape(targets)) throw NumericalError("loss_and_grads: shape mismatch");
  const double bsz = inputs.n;
  grads = zeros_like(net);
  ForwardCache<T> cache;

  Tensor4<T> out, tgt, net_in;
  if (net.arch == Arch::dncnn) {
    net_in = inputs;
    tgt = targets;
  } else {
    if (!sigma) throw NumericalError("loss_and_grads: ffdnet needs per-sample sigma");
    net_in = ffdnet_pack(inputs, *sigma, t_p);
    tgt = interleave4(targets);
  }
  const Tensor4<T> r = run_stack(net, net_in, Mode::train, &cache, threads);

  // out = data-channels(net_in) - r; loss = (1/B) sum ||tgt - out||^2
  const int dc = r.c;
  out = r;
  for (int b = 0; b < r.n; ++b)
    for (int i = 0; i < r.h; ++i)
      for (int j = 0; j < r.w; ++j)
        for (int ch = 0; ch < dc; ++ch)
          out(b, i, j, ch) = net_in(b, i, j, ch) - r(b, i, j, ch);

  double loss = 0;
  Tensor4<T> dres(r.n, r.h, r.w, dc);
  for (int b = 0; b < r.n; ++b)
    for (int i = 0; i < r.h; ++i)
      for (int j = 0; j < r.w; ++j)
        for (int ch = 0; ch < dc; ++ch) {
          const double e = static_cast<double>(out(b, i, j, ch)) - tgt(b, i, j, ch);
          loss += e * e;
          // out = in - r, so d loss / d r = -2 e / B
          dres(b, i, j, ch) = static_cast<T>(-2.0 * e / bsz);
        }
  loss /= bsz;
  backward_stack(net, cache, std::move(dres), grads, threads);
  return loss;
}

}  // namespace lisce::cnn
