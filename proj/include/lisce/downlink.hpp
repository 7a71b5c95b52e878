#pragma once

// Downlink payload phase: phase-aligned surface configuration and matched
// beamforming built from channel estimates, and the resulting achievable
// rate on the true channel.

#include <cstdint>
#include <vector>

#include "lisce/channel.hpp"
#include "lisce/estimation.hpp"
#include "lisce/types.hpp"

namespace lisce {

struct BeamformingSolution {
  cxvec phi_d;  // K unit-modulus surface phases
  cxvec w;      // M unit-norm beamformer
};

struct RateConfig {
  int T_p = 0;            // training slots spent per coherence block
  int T_c = 196;          // coherence block length
  double gamma_bar = 1.0; // downlink SNR, linear
};

// phi_d = exp(-j arg(V_hat^T conj(h_d_hat))); w aligned to the composite
// estimated channel. Throws DegenerateEstimate when the estimate is
// numerically zero and no direction is defined.
BeamformingSolution design_beamformers(const cxvec& h_d_hat, const cxmat& V_hat);

// R = (1 - T_p/T_c) log2(1 + gamma_bar |(h_d^T + phi_d^T V^T) w|^2).
double achievable_rate(const cxvec& h_d, const cxmat& V, const BeamformingSolution& sol,
                       const RateConfig& cfg);

struct RateStats {
  double mean = 0.0;
  double stderr_mean = 0.0;
  int trials = 0;
};

// Monte Carlo mean rate: per trial, train on the uplink at noise level
// sigma2_tr = 1/gamma_tr with DFT training (T_p = K+1), estimate with
// `method`, design the beamformers from the estimate, and score on the true
// channel. Trial streams match empirical_mse so methods share channels.
RateStats monte_carlo_rate(EstimMethod method, const ChannelModel& model, double gamma_tr,
                           const RateConfig& cfg, int trials, std::uint64_t seed,
                           int threads = 0, const Denoiser* denoiser = nullptr,
                           std::vector<double>* per_trial = nullptr);

}  // namespace lisce
