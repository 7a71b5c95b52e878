#pragma once

// Uplink training model y = G z + n and the LS/LMMSE estimators, their
// closed-form MSE under DFT training, asymptotic expansions, and the Monte
// Carlo MSE driver.

#include <cstdint>
#include <functional>
#include <limits>

#include "lisce/channel.hpp"
#include "lisce/pilot.hpp"
#include "lisce/rng.hpp"
#include "lisce/types.hpp"

namespace lisce {

struct MeasurementModel {
  cxmat G;               // (M*T_p) x (M*(K+1)) stacked training map
  PhaseShiftMatrix phi;  // surface configuration per pilot slot
  cxvec pilots;          // unit-modulus pilot symbols, length T_p
  double sigma2 = 1.0;   // noise variance (>= 0; estimators may be stricter)
  int M = 0;
  int K() const { return phi.K; }
  int T_p() const { return phi.T_p; }
};

// G = X (Phi (x) I_M) with X = blkdiag(x_1 I_M, ..., x_Tp I_M).
MeasurementModel build_measurement(const PhaseShiftMatrix& phi, const cxvec& pilots,
                                   double sigma2, int M);

// y = G z + n, n ~ CN(0, sigma2 I). Noise is drawn from rng in entry order.
cxvec simulate_rx(const MeasurementModel& m, const cxvec& z, RngStream& rng);

enum class EstimMethod { ls, lmmse, dncnn, ffdnet, genie };
const char* method_name(EstimMethod m);

struct EstimateReport {
  cxvec z_hat;
  int M = 0;
  int K = 0;
  EstimMethod method = EstimMethod::ls;
  // Populated by set_truth when the true channel is known.
  double sq_err_direct = std::numeric_limits<double>::quiet_NaN();
  double sq_err_cascaded = std::numeric_limits<double>::quiet_NaN();

  cxvec h_d_hat() const { return z_hat.head(M); }
  cxmat V_hat() const;
  void set_truth(const cxvec& z_true);
};

// Least squares: z_hat = (G^H G)^{-1} G^H y. Under DFT training the normal
// matrix is T_p I and the solve collapses to G^H y / T_p.
EstimateReport ls_estimate(const cxvec& y, const MeasurementModel& m);

enum class LmmseForm {
  automatic,    // DFT block fast path when applicable, else information
  covariance,   // C G^H (G C G^H + sigma2 I)^{-1} y
  information,  // (C^{-1} + G^H G / sigma2)^{-1} G^H y / sigma2
};
EstimateReport lmmse_estimate(const cxvec& y, const MeasurementModel& m, const cxmat& czz,
                              LmmseForm form = LmmseForm::automatic);

// Error covariance (C^{-1} + (Phi^H Phi (x) I_M)/sigma2)^{-1}.
cxmat lmmse_error_cov(const PhaseShiftMatrix& phi, const cxmat& czz, double sigma2, int M);

struct MseSplit {
  double total = 0.0;
  double direct = 0.0;
  double cascaded = 0.0;
};

// Eigenvalue form of the LMMSE MSE under DFT training.
MseSplit analytic_mse_dft_split(const CorrelationProfile& p, int T_p, double sigma2);
double analytic_mse_dft(const CorrelationProfile& p, int T_p, double sigma2);

enum class SnrRegime { high, low };
enum class AsymptoticForm { general, exponential };

// Leading-order LMMSE MSE behavior. The general form evaluates the traces
// numerically; the exponential form uses the closed-form trace identities
// for exponential correlation and must agree with the general form.
double asymptotic_mse(const CorrelationProfile& p, int T_p, double sigma2, SnrRegime regime,
                      AsymptoticForm form);

// Closed-form trace identities for exponential correlation.
double exp_trace_inverse(int M, double rho);  // tr(R^{-1})
double exp_trace_square(int M, double rho);   // tr(R^2)

struct EmpiricalMse {
  double total = 0.0, direct = 0.0, cascaded = 0.0;  // means, linear units
  double stderr_total = 0.0, stderr_direct = 0.0, stderr_cascaded = 0.0;
  int trials = 0;
};

// Maps an LS estimate to a refined one (used to plug CNN denoisers into the
// Monte Carlo loop without this module depending on them).
using Denoiser = std::function<cxvec(const cxvec& z_hat_ls, const MeasurementModel& m)>;

// Monte Carlo estimation error over `trials` independent channel/noise
// draws. Trial t uses stream (seed, empirical_trial|t) for its channel and
// noise, so every method sees identical data and results are reproducible
// for any thread count; accumulation runs in trial order.
EmpiricalMse empirical_mse(EstimMethod method, const ChannelModel& model,
                           const PhaseShiftMatrix& phi, double sigma2, int trials,
                           std::uint64_t seed, int threads = 0,
                           const Denoiser* denoiser = nullptr);

}  // namespace lisce
