#include "lisce/estimation.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "lisce/errors.hpp"
#include "lisce/linalg.hpp"
#include "lisce/parallel.hpp"

namespace lisce {

const char* method_name(EstimMethod m) {
  switch (m) {
    case EstimMethod::ls: return "ls";
    case EstimMethod::lmmse: return "lmmse";
    case EstimMethod::dncnn: return "dncnn";
    case EstimMethod::ffdnet: return "ffdnet";
    case EstimMethod::genie: return "genie";
  }
  return "?";
}

cxmat EstimateReport::V_hat() const {
  cxmat v(M, K);
  for (int k = 0; k < K; ++k) v.col(k) = z_hat.segment(M * (k + 1), M);
  return v;
}

void EstimateReport::set_truth(const cxvec& z_true) {
  if (z_true.size() != z_hat.size())
    throw NumericalError("EstimateReport::set_truth: dimension mismatch");
  sq_err_direct = (z_hat.head(M) - z_true.head(M)).squaredNorm();
  sq_err_cascaded = (z_hat.tail(M * K) - z_true.tail(M * K)).squaredNorm();
}

MeasurementModel build_measurement(const PhaseShiftMatrix& phi, const cxvec& pilots,
                                   double sigma2, int M) {
  phi.validate();
  if (M < 1) throw NumericalError("build_measurement: M must be >= 1");
  if (pilots.size() != phi.T_p)
    throw NumericalError("build_measurement: pilots length must equal T_p");
  for (Eigen::Index t = 0; t < pilots.size(); ++t)
    if (std::abs(std::abs(pilots[t]) - 1.0) > 1e-12)
      throw NumericalError("build_measurement: pilot symbols must be unit modulus");
  if (sigma2 < 0.0 || !std::isfinite(sigma2))
    throw NumericalError("build_measurement: sigma2 must be finite and >= 0");

  MeasurementModel m;
  m.phi = phi;
  m.pilots = pilots;
  m.sigma2 = sigma2;
  m.M = M;
  m.G = kron(phi.phi, cxmat::Identity(M, M));
  for (int t = 0; t < phi.T_p; ++t) m.G.middleRows(t * M, M) *= pilots[t];
  return m;
}

cxvec simulate_rx(const MeasurementModel& m, const cxvec& z, RngStream& rng) {
  if (z.size() != m.G.cols()) throw NumericalError("simulate_rx: z dimension mismatch");
  cxvec y = m.G * z;
  if (m.sigma2 > 0.0) {
    const double s = std::sqrt(m.sigma2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += s * rng.complex_normal();
  }
  return y;
}

namespace {

void check_rx(const cxvec& y, const MeasurementModel& m) {
  if (y.size() != m.G.rows()) throw NumericalError("estimate: y dimension mismatch");
  if (m.T_p() < m.K() + 1)
    throw InsufficientPilots("estimate: T_p < K+1, normal equations underdetermined");
}

cxmat block_of(const cxmat& czz, int b, int M) { return czz.block(b * M, b * M, M, M); }

}  // namespace

EstimateReport ls_estimate(const cxvec& y, const MeasurementModel& m) {
  check_rx(y, m);
  EstimateReport rep;
  rep.M = m.M;
  rep.K = m.K();
  rep.method = EstimMethod::ls;
  if (m.phi.kind == PhiKind::dft) {
    rep.z_hat = m.G.adjoint() * y / static_cast<double>(m.T_p());
    return rep;
  }
  const cxmat gram = m.G.adjoint() * m.G;
  try {
    rep.z_hat = solve_hpd(((gram + gram.adjoint()) * 0.5).eval(), m.G.adjoint() * y);
  } catch (const NotPd&) {
    throw SingularNormalMatrix("ls_estimate: G^H G is singular for this training matrix");
  }
  return rep;
}

EstimateReport lmmse_estimate(const cxvec& y, const MeasurementModel& m, const cxmat& czz,
                              LmmseForm form) {
  check_rx(y, m);
  if (!(m.sigma2 > 0.0)) throw NumericalError("lmmse_estimate: sigma2 must be > 0");
  if (czz.rows() != m.G.cols()) throw NumericalError("lmmse_estimate: czz dimension mismatch");
  EstimateReport rep;
  rep.M = m.M;
  rep.K = m.K();
  rep.method = EstimMethod::lmmse;

  if (form == LmmseForm::covariance) {
    cxmat p = m.G * czz * m.G.adjoint();
    p.diagonal().array() += m.sigma2;
    rep.z_hat = czz * m.G.adjoint() * solve_hpd(((p + p.adjoint()) * 0.5).eval(), cxmat(y));
    return rep;
  }

  if (form == LmmseForm::automatic && m.phi.kind == PhiKind::dft) {
    // G^H G = T_p I and C_zz is block diagonal, so the normal equations
    // split into K+1 independent M x M systems:
    //   z_b = R_b (I + c R_b)^{-1} rhs_b,  c = T_p / sigma2.
    const double c = static_cast<double>(m.T_p()) / m.sigma2;
    const cxvec rhs = m.G.adjoint() * y / m.sigma2;
    rep.z_hat.resize(czz.rows());
    const cxmat eye = cxmat::Identity(m.M, m.M);
    for (int b = 0; b <= m.K(); ++b) {
      const cxmat rb = block_of(czz, b, m.M);
      cxmat a = eye + c * rb;
      a = ((a + a.adjoint()) * 0.5).eval();
      rep.z_hat.segment(b * m.M, m.M) =
          rb * solve_hpd(a, cxmat(rhs.segment(b * m.M, m.M)));
    }
    return rep;
  }

  // Information form.
  const int M = m.M;
  const int nblk = static_cast<int>(czz.rows()) / M;
  cxmat cinv = cxmat::Zero(czz.rows(), czz.cols());
  const cxmat eye = cxmat::Identity(M, M);
  for (int b = 0; b < nblk; ++b)
    cinv.block(b * M, b * M, M, M) = solve_hpd(block_of(czz, b, M), eye);
  cxmat n = cinv + m.G.adjoint() * m.G / m.sigma2;
  n = ((n + n.adjoint()) * 0.5).eval();
  rep.z_hat = solve_hpd(n, cxmat(m.G.adjoint() * y / m.sigma2));
  return rep;
}

cxmat lmmse_error_cov(const PhaseShiftMatrix& phi, const cxmat& czz, double sigma2, int M) {
  if (!(sigma2 > 0.0)) throw NumericalError("lmmse_error_cov: sigma2 must be > 0");
  if (czz.rows() != static_cast<Eigen::Index>(M) * (phi.K + 1))
    throw NumericalError("lmmse_error_cov: czz dimension mismatch");
  const int nblk = phi.K + 1;
  cxmat cinv = cxmat::Zero(czz.rows(), czz.cols());
  const cxmat eye = cxmat::Identity(M, M);
  for (int b = 0; b < nblk; ++b)
    cinv.block(b * M, b * M, M, M) = solve_hpd(block_of(czz, b, M), eye);
  cxmat n = cinv + kron(phi.phi.adjoint() * phi.phi, eye) / sigma2;
  n = ((n + n.adjoint()) * 0.5).eval();
  return solve_hpd(n, cxmat::Identity(n.rows(), n.cols()));
}

MseSplit analytic_mse_dft_split(const CorrelationProfile& p, int T_p, double sigma2) {
  p.validate();
  if (T_p < p.K + 1) throw InsufficientPilots("analytic_mse_dft: T_p < K+1");
  if (!(sigma2 > 0.0)) throw NumericalError("analytic_mse_dft: sigma2 must be > 0");
  const double c = static_cast<double>(T_p) / sigma2;
  auto [lam_ub, u1] = eig_hermitian(exp_corr_matrix(p.M, p.rho1));
  auto [lam_lb, u2] = eig_hermitian(exp_corr_matrix(p.M, p.rho2));
  MseSplit out;
  for (int i = 0; i < p.M; ++i) {
    out.direct += lam_ub[i] / (1.0 + lam_ub[i] * c);
    out.cascaded += p.K * lam_lb[i] / (1.0 + lam_lb[i] * c);
  }
  out.total = out.direct + out.cascaded;
  return out;
}

double analytic_mse_dft(const CorrelationProfile& p, int T_p, double sigma2) {
  return analytic_mse_dft_split(p, T_p, sigma2).total;
}

double exp_trace_inverse(int M, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidRho("exp_trace_inverse: rho outside [0, 1)");
  return (M + (M - 2) * rho * rho) / (1.0 - rho * rho);
}

double exp_trace_square(int M, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidRho("exp_trace_square: rho outside [0, 1)");
  const double r2 = rho * rho;
  const double denom = (1.0 - r2) * (1.0 - r2);
  return (M * (1.0 - r2 * r2) - 2.0 * r2 * (1.0 - std::pow(rho, 2 * M))) / denom;
}

double asymptotic_mse(const CorrelationProfile& p, int T_p, double sigma2, SnrRegime regime,
                      AsymptoticForm form) {
  p.validate();
  if (T_p < p.K + 1) throw InsufficientPilots("asymptotic_mse: T_p < K+1");
  if (!(sigma2 > 0.0)) throw NumericalError("asymptotic_mse: sigma2 must be > 0");
  const double M = p.M, K = p.K;

  if (regime == SnrRegime::high) {
    double tri_ub, tri_lb;
    if (form == AsymptoticForm::exponential) {
      tri_ub = exp_trace_inverse(p.M, p.rho1);
      tri_lb = exp_trace_inverse(p.M, p.rho2);
    } else {
      tri_ub = trace_inverse_hpd(exp_corr_matrix(p.M, p.rho1));
      tri_lb = trace_inverse_hpd(exp_corr_matrix(p.M, p.rho2));
    }
    const double ls = M * (K + 1) * sigma2 / T_p;
    const double s = sigma2 / T_p;
    return ls - s * s * (tri_ub + K * tri_lb);
  }

  double trs_ub, trs_lb;
  if (form == AsymptoticForm::exponential) {
    trs_ub = exp_trace_square(p.M, p.rho1);
    trs_lb = exp_trace_square(p.M, p.rho2);
  } else {
    trs_ub = exp_corr_matrix(p.M, p.rho1).squaredNorm();
    trs_lb = exp_corr_matrix(p.M, p.rho2).squaredNorm();
  }
  return M * (K + 1) - (T_p / sigma2) * (trs_ub + K * trs_lb);
}

EmpiricalMse empirical_mse(EstimMethod method, const ChannelModel& model,
                           const PhaseShiftMatrix& phi, double sigma2, int trials,
                           std::uint64_t seed, int threads, const Denoiser* denoiser) {
  if (trials < 1) throw NumericalError("empirical_mse: trials must be >= 1");
  if ((method == EstimMethod::dncnn || method == EstimMethod::ffdnet) && denoiser == nullptr)
    throw NumericalError("empirical_mse: CNN method requires a denoiser");

  const int M = model.profile().M;
  cxvec pilots = cxvec::Ones(phi.T_p);
  const MeasurementModel meas = build_measurement(phi, pilots, sigma2, M);

  std::vector<double> err_d(trials), err_c(trials);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    RngStream rng = make_stream(seed, StreamTag::empirical_trial, t);
    const ChannelRealization ch = model.sample(rng);
    const cxvec y = simulate_rx(meas, ch.z, rng);
    EstimateReport rep;
    switch (method) {
      case EstimMethod::ls:
        rep = ls_estimate(y, meas);
        break;
      case EstimMethod::lmmse:
        rep = lmmse_estimate(y, meas, model.czz());
        break;
      case EstimMethod::genie:
        rep.z_hat = ch.z;
        rep.M = M;
        rep.K = model.profile().K;
        rep.method = EstimMethod::genie;
        break;
      case EstimMethod::dncnn:
      case EstimMethod::ffdnet: {
        EstimateReport ls = ls_estimate(y, meas);
        rep.z_hat = (*denoiser)(ls.z_hat, meas);
        rep.M = M;
        rep.K = model.profile().K;
        rep.method = method;
        break;
      }
    }
    rep.set_truth(ch.z);
    err_d[t] = rep.sq_err_direct;
    err_c[t] = rep.sq_err_cascaded;
  });

  // Fixed-order reduction; independent of how trials were scheduled.
  EmpiricalMse out;
  out.trials = trials;
  double sd = 0, sc = 0, st = 0;
  for (int t = 0; t < trials; ++t) {
    sd += err_d[t];
    sc += err_c[t];
    st += err_d[t] + err_c[t];
  }
  out.direct = sd / trials;
  out.cascaded = sc / trials;
  out.total = st / trials;
  double vd = 0, vc = 0, vt = 0;
  for (int t = 0; t < trials; ++t) {
    vd += (err_d[t] - out.direct) * (err_d[t] - out.direct);
    vc += (err_c[t] - out.cascaded) * (err_c[t] - out.cascaded);
    const double tt = err_d[t] + err_c[t] - out.total;
    vt += tt * tt;
  }
  const double denom = trials > 1 ? static_cast<double>(trials - 1) : 1.0;
  out.stderr_direct = std::sqrt(vd / denom / trials);
  out.stderr_cascaded = std::sqrt(vc / denom / trials);
  out.stderr_total = std::sqrt(vt / denom / trials);
  return out;
}

}  // namespace lisce
