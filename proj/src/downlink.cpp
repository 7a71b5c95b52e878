#include "lisce/downlink.hpp"

#include <cmath>
#include <vector>

#include "lisce/errors.hpp"
#include "lisce/parallel.hpp"

namespace lisce {

BeamformingSolution design_beamformers(const cxvec& h_d_hat, const cxmat& V_hat) {
  if (V_hat.rows() != h_d_hat.size())
    throw NumericalError("design_beamformers: dimension mismatch");
  const Eigen::Index k = V_hat.cols();
  BeamformingSolution sol;
  sol.phi_d.resize(k);
  const cxvec t = V_hat.transpose() * h_d_hat.conjugate();
  for (Eigen::Index i = 0; i < k; ++i) {
    const double mag = std::abs(t[i]);
    // phase of 0 is taken as 0, so a dead element degrades to no rotation
    sol.phi_d[i] = (mag > 0.0) ? cxd(std::conj(t[i]) / mag) : cxd(1.0, 0.0);
  }
  cxvec u = h_d_hat.conjugate() + V_hat.conjugate() * sol.phi_d.conjugate();
  const double n = u.norm();
  if (n < 1e-30)
    throw DegenerateEstimate("design_beamformers: estimated composite channel is zero");
  sol.w = u / n;
  return sol;
}

double achievable_rate(const cxvec& h_d, const cxmat& V, const BeamformingSolution& sol,
                       const RateConfig& cfg) {
  if (cfg.T_c < 1 || cfg.T_p < 0 || cfg.T_p > cfg.T_c)
    throw NumericalError("achievable_rate: need 0 <= T_p <= T_c");
  if (!(cfg.gamma_bar >= 0.0)) throw NumericalError("achievable_rate: gamma_bar must be >= 0");
  const cxd a = (h_d.transpose() * sol.w).value() +
                (sol.phi_d.transpose() * (V.transpose() * sol.w)).value();
  const double frac = 1.0 - static_cast<double>(cfg.T_p) / cfg.T_c;
  return frac * std::log2(1.0 + cfg.gamma_bar * std::norm(a));
}

RateStats monte_carlo_rate(EstimMethod method, const ChannelModel& model, double gamma_tr,
                           const RateConfig& cfg, int trials, std::uint64_t seed, int threads,
                           const Denoiser* denoiser, std::vector<double>* per_trial) {
  if (trials < 1) throw NumericalError("monte_carlo_rate: trials must be >= 1");
  if (!(gamma_tr > 0.0)) throw NumericalError("monte_carlo_rate: gamma_tr must be > 0");
  if ((method == EstimMethod::dncnn || method == EstimMethod::ffdnet) && denoiser == nullptr)
    throw NumericalError("monte_carlo_rate: CNN method requires a denoiser");

  const int M = model.profile().M;
  const int K = model.profile().K;
  const double sigma2 = 1.0 / gamma_tr;
  const PhaseShiftMatrix phi = dft_phase_matrix(K + 1, K);
  const MeasurementModel meas = build_measurement(phi, cxvec::Ones(K + 1), sigma2, M);

  std::vector<double> rates(trials);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    RngStream rng = make_stream(seed, StreamTag::rate_trial, t);
    const ChannelRealization ch = model.sample(rng);
    cxvec h_d_hat;
    cxmat v_hat;
    if (method == EstimMethod::genie) {
      h_d_hat = ch.h_d;
      v_hat = ch.V;
    } else {
      const cxvec y = simulate_rx(meas, ch.z, rng);
      EstimateReport rep;
      switch (method) {
        case EstimMethod::ls:
          rep = ls_estimate(y, meas);
          break;
        case EstimMethod::lmmse:
          rep = lmmse_estimate(y, meas, model.czz());
          break;
        default: {
          EstimateReport ls = ls_estimate(y, meas);
          rep.z_hat = (*denoiser)(ls.z_hat, meas);
          rep.M = M;
          rep.K = K;
          break;
        }
      }
      rep.M = M;
      rep.K = K;
      h_d_hat = rep.h_d_hat();
      v_hat = rep.V_hat();
    }
    const BeamformingSolution sol = design_beamformers(h_d_hat, v_hat);
    rates[t] = achievable_rate(ch.h_d, ch.V, sol, cfg);
  });

  RateStats out;
  out.trials = trials;
  double s = 0;
  for (double r : rates) s += r;
  out.mean = s / trials;
  double v = 0;
  for (double r : rates) v += (r - out.mean) * (r - out.mean);
  out.stderr_mean = std::sqrt(v / (trials > 1 ? trials - 1.0 : 1.0) / trials);
  if (per_trial) *per_trial = rates;
  return out;
}

}  // namespace lisce
