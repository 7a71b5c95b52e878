#pragma once

// Dataset synthesis, Adam, the training loop with validation-based early
// stopping, and adapters that expose trained networks as denoisers for the
// Monte Carlo drivers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

#include "lisce/cnn/network.hpp"
#include "lisce/estimation.hpp"

namespace lisce::cnn {

template <typename T>
struct Dataset {
  int M = 0, K = 0;
  Tensor4<T> inputs;           // (N, M, K+1, 2) LS estimates
  Tensor4<T> targets;          // (N, M, K+1, 2) true channels
  std::vector<T> sigma;        // per-sample measurement noise std
  std::vector<double> snr_db;  // per-sample training SNR
  int count() const { return inputs.n; }
};

struct DatasetSpec {
  CorrelationProfile profile;
  int n = 0;
  std::vector<double> snr_db;  // assigned round-robin over samples
  std::uint64_t seed = 1;
  StreamTag tag = StreamTag::dataset_train;
};

// Draws channels, simulates DFT training at the round-robin SNR, and stores
// the LS estimate image next to the true channel image. Sample i uses
// stream (seed, tag|i), so datasets are reproducible elementwise.
template <typename T>
Dataset<T> generate_dataset(const DatasetSpec& spec, int threads = 0) {
  if (spec.n < 1) throw NumericalError("generate_dataset: n must be >= 1");
  if (spec.snr_db.empty()) throw NumericalError("generate_dataset: snr list empty");
  const ChannelModel model(spec.profile);
  const int M = spec.profile.M, K = spec.profile.K;
  const PhaseShiftMatrix phi = dft_phase_matrix(K + 1, K);
  const MeasurementModel base = build_measurement(phi, cxvec::Ones(K + 1), 1.0, M);

  Dataset<T> ds;
  ds.M = M;
  ds.K = K;
  ds.inputs = Tensor4<T>(spec.n, M, K + 1, 2);
  ds.targets = Tensor4<T>(spec.n, M, K + 1, 2);
  ds.sigma.resize(spec.n);
  ds.snr_db.resize(spec.n);

  parallel_for(static_cast<std::size_t>(spec.n), threads, [&](std::size_t i) {
    RngStream rng(spec.seed, stream_id(spec.tag, i));
    const double snr = spec.snr_db[i % spec.snr_db.size()];
    const double sigma2 = std::pow(10.0, -snr / 10.0);
    MeasurementModel meas = base;
    meas.sigma2 = sigma2;
    const ChannelRealization ch = model.sample(rng);
    const cxvec y = simulate_rx(meas, ch.z, rng);
    const EstimateReport ls = ls_estimate(y, meas);
    const Tensor4<T> in = to_image<T>(ls.z_hat, M);
    const Tensor4<T> tg = to_image<T>(ch.z, M);
    const std::size_t stride = in.size();
    std::copy(in.v.begin(), in.v.end(), ds.inputs.v.begin() + i * stride);
    std::copy(tg.v.begin(), tg.v.end(), ds.targets.v.begin() + i * stride);
    ds.sigma[i] = static_cast<T>(std::sqrt(sigma2));
    ds.snr_db[i] = snr;
  });
  return ds;
}

template <typename T>
Tensor4<T> slice_batch(const Tensor4<T>& all, const std::vector<int>& idx) {
  Tensor4<T> out(static_cast<int>(idx.size()), all.h, all.w, all.c);
  const std::size_t stride = static_cast<std::size_t>(all.h) * all.w * all.c;
  for (std::size_t b = 0; b < idx.size(); ++b)
    std::copy(all.v.begin() + idx[b] * stride, all.v.begin() + (idx[b] + 1) * stride,
              out.v.begin() + b * stride);
  return out;
}

struct TrainConfig {
  int batch_size = 100;
  int max_epochs = 200;
  int patience = 5;
  double improvement_delta = 1e-5;  // relative improvement that resets patience
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int threads = 0;
  std::uint64_t seed = 1;
};

template <typename T>
struct AdamState {
  Network<T> m, v;
  long long t = 0;
};

template <typename T>
void adam_step(Network<T>& w, const Network<T>& g, AdamState<T>& st, const TrainConfig& cfg) {
  st.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  auto update = [&](std::vector<T>& wv, const std::vector<T>& gv, std::vector<T>& mv,
                    std::vector<T>& vv) {
    for (std::size_t i = 0; i < wv.size(); ++i) {
      const double gi = gv[i];
      const double m = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * gi;
      const double v = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gi * gi;
      mv[i] = static_cast<T>(m);
      vv[i] = static_cast<T>(v);
      wv[i] -= static_cast<T>(cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps));
    }
  };
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    update(w.layers[l].kernel, g.layers[l].kernel, st.m.layers[l].kernel, st.v.layers[l].kernel);
    update(w.layers[l].bias, g.layers[l].bias, st.m.layers[l].bias, st.v.layers[l].bias);
    if (w.layers[l].has_bn) {
      update(w.layers[l].gamma, g.layers[l].gamma, st.m.layers[l].gamma, st.v.layers[l].gamma);
      update(w.layers[l].beta, g.layers[l].beta, st.m.layers[l].beta, st.v.layers[l].beta);
    }
  }
}

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool improved = false;
};

template <typename T>
struct TrainResult {
  Network<T> net;  // best-validation weights
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val = 0.0;
};

// Mean per-sample squared Frobenius error of the denoised output, infer mode.
template <typename T>
double validation_loss(Network<T>& net, const Dataset<T>& ds, int t_p, int batch,
                       int threads = 1) {
  double total = 0;
  for (int start = 0; start < ds.count(); start += batch) {
    const int bsz = std::min(batch, ds.count() - start);
    std::vector<int> idx(bsz);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor4<T> in = slice_batch(ds.inputs, idx);
    const Tensor4<T> tg = slice_batch(ds.targets, idx);
    Tensor4<T> out;
    if (net.arch == Arch::dncnn) {
      out = dncnn_forward<T>(net, in, Mode::infer, nullptr, threads);
    } else {
      std::vector<T> sg(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) sg[b] = ds.sigma[idx[b]];
      out = ffdnet_forward<T>(net, in, sg, t_p, Mode::infer, nullptr, threads);
    }
    for (std::size_t i = 0; i < out.v.size(); ++i) {
      const double e = static_cast<double>(out.v[i]) - tg.v[i];
      total += e * e;
    }
  }
  return total / ds.count();
}

template <typename T>
TrainResult<T> train(Arch arch, int depth, int n_f, const Dataset<T>& train_ds,
                     const Dataset<T>& val_ds, const TrainConfig& cfg) {
  if (train_ds.count() < 1 || val_ds.count() < 1)
    throw NumericalError("train: empty dataset");
  const int t_p = train_ds.K + 1;
  Network<T> net = make_network<T>(arch, depth, n_f, train_ds.M, train_ds.K);
  {
    RngStream rng = make_stream(cfg.seed, StreamTag::weight_init, 0);
    init_weights(net, rng);
  }
  AdamState<T> adam{zeros_like(net), zeros_like(net), 0};

  TrainResult<T> res;
  res.net = net;
  res.best_val = std::numeric_limits<double>::infinity();
  int since_improvement = 0;

  std::vector<int> order(train_ds.count());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    // Deterministic per-epoch shuffle.
    RngStream shuffle_rng = make_stream(cfg.seed, StreamTag::shuffle, epoch);
    for (int i = train_ds.count() - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.uniform_index(i + 1));
      std::swap(order[i], order[j]);
    }

    double train_loss = 0;
    int batches = 0;
    for (int start = 0; start < train_ds.count(); start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, train_ds.count() - start);
      std::vector<int> idx(order.begin() + start, order.begin() + start + bsz);
      const Tensor4<T> in = slice_batch(train_ds.inputs, idx);
      const Tensor4<T> tg = slice_batch(train_ds.targets, idx);
      std::vector<T> sg(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) sg[b] = train_ds.sigma[idx[b]];
      Network<T> grads;
      const double loss =
          loss_and_grads(net, in, tg, arch == Arch::ffdnet ? &sg : nullptr, t_p, grads,
                         resolve_threads(cfg.threads));
      if (!std::isfinite(loss)) throw TrainingDiverged("train: non-finite batch loss");
      adam_step(net, grads, adam, cfg);
      train_loss += loss;
      ++batches;
    }
    train_loss /= std::max(batches, 1);

    const double val =
        validation_loss(net, val_ds, t_p, cfg.batch_size, resolve_threads(cfg.threads));
    if (!std::isfinite(val)) throw TrainingDiverged("train: non-finite validation loss");

    EpochLog lg{epoch, train_loss, val, false};
    if (val < res.best_val * (1.0 - cfg.improvement_delta)) {
      res.best_val = val;
      res.best_epoch = epoch;
      res.net = net;
      since_improvement = 0;
      lg.improved = true;
    } else {
      ++since_improvement;
    }
    res.log.push_back(lg);
    if (since_improvement >= cfg.patience) break;
  }
  return res;
}

// Per-part test error of a trained network over a dataset, in the same
// units as empirical_mse (mean over samples of the squared error norm).
template <typename T>
EmpiricalMse evaluate_mse(Network<T>& net, const Dataset<T>& ds, int threads = 1) {
  const int n = ds.count();
  std::vector<double> err_d(n), err_c(n);
  const int batch = 100;
  const int t_p = ds.K + 1;
  for (int start = 0; start < n; start += batch) {
    const int bsz = std::min(batch, n - start);
    std::vector<int> idx(bsz);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor4<T> in = slice_batch(ds.inputs, idx);
    const Tensor4<T> tg = slice_batch(ds.targets, idx);
    Tensor4<T> out;
    if (net.arch == Arch::dncnn) {
      out = dncnn_forward<T>(net, in, Mode::infer, nullptr, threads);
    } else {
      std::vector<T> sg(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) sg[b] = ds.sigma[idx[b]];
      out = ffdnet_forward<T>(net, in, sg, t_p, Mode::infer, nullptr, threads);
    }
    for (int b = 0; b < bsz; ++b) {
      double ed = 0, ec = 0;
      for (int i = 0; i < out.h; ++i)
        for (int j = 0; j < out.w; ++j)
          for (int ch = 0; ch < 2; ++ch) {
            const double e = static_cast<double>(out(b, i, j, ch)) - tg(b, i, j, ch);
            if (j == 0)
              ed += e * e;
            else
              ec += e * e;
          }
      err_d[start + b] = ed;
      err_c[start + b] = ec;
    }
  }
  EmpiricalMse out;
  out.trials = n;
  double sd = 0, sc = 0;
  for (int i = 0; i < n; ++i) {
    sd += err_d[i];
    sc += err_c[i];
  }
  out.direct = sd / n;
  out.cascaded = sc / n;
  out.total = out.direct + out.cascaded;
  double vd = 0, vc = 0, vt = 0;
  for (int i = 0; i < n; ++i) {
    vd += (err_d[i] - out.direct) * (err_d[i] - out.direct);
    vc += (err_c[i] - out.cascaded) * (err_c[i] - out.cascaded);
    const double tt = err_d[i] + err_c[i] - out.total;
    vt += tt * tt;
  }
  const double denom = n > 1 ? n - 1.0 : 1.0;
  out.stderr_direct = std::sqrt(vd / denom / n);
  out.stderr_cascaded = std::sqrt(vc / denom / n);
  out.stderr_total = std::sqrt(vt / denom / n);
  return out;
}

// Estimator adapters for the Monte Carlo drivers. The wrapped copy is only
// ever run in infer mode, so sharing it across trials is safe for reads;
// the drivers may call it from several threads, hence the per-call copy-free
// const usage via a shared immutable network.
inline Denoiser make_dncnn_denoiser(const Network<float>& net) {
  auto shared = std::make_shared<Network<float>>(net);
  return [shared](const cxvec& z_ls, const MeasurementModel& m) -> cxvec {
    Tensor4<float> img = to_image<float>(z_ls, m.M);
    Network<float>& n = *shared;  // infer mode does not mutate
    const Tensor4<float> out = dncnn_forward(n, img, Mode::infer);
    return from_image(out);
  };
}

inline Denoiser make_ffdnet_denoiser(const Network<float>& net) {
  auto shared = std::make_shared<Network<float>>(net);
  return [shared](const cxvec& z_ls, const MeasurementModel& m) -> cxvec {
    Tensor4<float> img = to_image<float>(z_ls, m.M);
    std::vector<float> sg{static_cast<float>(std::sqrt(m.sigma2))};
    Network<float>& n = *shared;
    const Tensor4<float> out = ffdnet_forward(n, img, sg, m.T_p(), Mode::infer);
    return from_image(out);
  };
}

}  // namespace lisce::cnn
