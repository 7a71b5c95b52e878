#include "lisce/pilot.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "lisce/errors.hpp"
#include "lisce/linalg.hpp"

namespace lisce {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_dims(int T_p, int K) {
  if (K < 1) throw NumericalError("phase matrix: K must be >= 1");
  if (T_p < K + 1)
    throw InsufficientPilots("phase matrix: T_p = " + std::to_string(T_p) +
                             " < K+1 = " + std::to_string(K + 1));
}
}  // namespace

void PhaseShiftMatrix::validate() const {
  if (phi.rows() != T_p || phi.cols() != K + 1)
    throw NumericalError("PhaseShiftMatrix: storage does not match T_p x (K+1)");
  check_dims(T_p, K);
  for (int t = 0; t < T_p; ++t)
    if (std::abs(phi(t, 0) - cxd(1.0, 0.0)) > 1e-12)
      throw NumericalError("PhaseShiftMatrix: first column must be all ones");
  for (int t = 0; t < T_p; ++t) {
    for (int k = 1; k <= K; ++k) {
      const double mag = std::abs(phi(t, k));
      if (kind == PhiKind::onoff) {
        if (std::abs(mag) > 1e-12 && std::abs(mag - 1.0) > 1e-12)
          throw NumericalError("PhaseShiftMatrix: onoff entries must be 0 or 1");
      } else if (std::abs(mag - 1.0) > 1e-12) {
        throw NumericalError("PhaseShiftMatrix: entry off the unit circle");
      }
    }
  }
}

PhaseShiftMatrix dft_phase_matrix(int T_p, int K) {
  check_dims(T_p, K);
  PhaseShiftMatrix out{T_p, K, PhiKind::dft, cxmat(T_p, K + 1)};
  for (int t = 0; t < T_p; ++t)
    for (int k = 0; k <= K; ++k) {
      const double ang = -kTwoPi * static_cast<double>(t) * static_cast<double>(k) / T_p;
      out.phi(t, k) = cxd(std::cos(ang), std::sin(ang));
    }
  out.phi.col(0).setOnes();  // kill the rounding in cos/sin at angle 0
  return out;
}

PhaseShiftMatrix onoff_phase_matrix(int T_p, int K) {
  check_dims(T_p, K);
  PhaseShiftMatrix out{T_p, K, PhiKind::onoff, cxmat::Zero(T_p, K + 1)};
  out.phi.col(0).setOnes();
  // Row 0 keeps every element off; row t (1 <= t <= K) switches element t on.
  // Rows beyond K+1 repeat the all-off row.
  for (int t = 1; t <= std::min(K, T_p - 1); ++t) out.phi(t, t) = 1.0;
  return out;
}

PhaseShiftMatrix random_phase_matrix(int T_p, int K, RngStream& rng) {
  check_dims(T_p, K);
  PhaseShiftMatrix out{T_p, K, PhiKind::random, cxmat(T_p, K + 1)};
  out.phi.col(0).setOnes();
  for (int t = 0; t < T_p; ++t)
    for (int k = 1; k <= K; ++k) {
      const double ang = kTwoPi * rng.uniform();
      out.phi(t, k) = cxd(std::cos(ang), std::sin(ang));
    }
  return out;
}

namespace {

// blkdiag inverse of czz with M x M blocks, via per-block Cholesky.
cxmat block_diag_inverse(const cxmat& czz, int M) {
  const int n = static_cast<int>(czz.rows());
  if (M < 1 || n % M != 0) throw NumericalError("block_diag_inverse: bad block size");
  cxmat inv = cxmat::Zero(n, n);
  const cxmat eye = cxmat::Identity(M, M);
  for (int b = 0; b < n / M; ++b)
    inv.block(b * M, b * M, M, M) = solve_hpd(czz.block(b * M, b * M, M, M), eye);
  return inv;
}

void check_phi_vs_czz(const PhaseShiftMatrix& phi, const cxmat& czz, double sigma2, int M) {
  if (!(sigma2 > 0.0)) throw NumericalError("lmmse_mse_of_phi: sigma2 must be > 0");
  if (czz.rows() != czz.cols()) throw NumericalError("lmmse_mse_of_phi: czz not square");
  if (czz.rows() != static_cast<Eigen::Index>(M) * (phi.K + 1))
    throw NumericalError("lmmse_mse_of_phi: czz dimension does not match M(K+1)");
}

// J(phi) = tr(A A^H Phĩ C Phĩ^H) - 2 Re tr(C A^H Phĩ), the phi-dependent
// part of the surrogate, with A computed at the expansion point.
double surrogate_j(const cxmat& a, const cxmat& phitil, const cxmat& czz) {
  const cxmat aah = a * a.adjoint();
  const cxmat pc = phitil * czz;
  const double quad = (aah * pc * phitil.adjoint()).trace().real();
  const double lin = (czz * a.adjoint() * phitil).trace().real();
  return quad - 2.0 * lin;
}

}  // namespace

double lmmse_mse_of_phi(const PhaseShiftMatrix& phi, const cxmat& czz, double sigma2, int M) {
  check_phi_vs_czz(phi, czz, sigma2, M);
  const cxmat cinv = block_diag_inverse(czz, M);
  const cxmat gram = phi.phi.adjoint() * phi.phi;
  cxmat n = cinv + kron(gram, cxmat::Identity(M, M)) / sigma2;
  n = ((n + n.adjoint()) * 0.5).eval();
  return trace_inverse_hpd(n);
}

double surrogate_value(const PhaseShiftMatrix& phi, const PhaseShiftMatrix& phi_t,
                       const cxmat& czz, double sigma2, int M) {
  check_phi_vs_czz(phi_t, czz, sigma2, M);
  if (phi.T_p != phi_t.T_p || phi.K != phi_t.K)
    throw NumericalError("surrogate_value: phi and phi_t shapes differ");
  const cxmat eye_m = cxmat::Identity(M, M);
  const cxmat phitil_t = kron(phi_t.phi, eye_m);
  cxmat p = phitil_t * czz * phitil_t.adjoint();
  p.diagonal().array() += sigma2;
  p = ((p + p.adjoint()) * 0.5).eval();
  const cxmat a = solve_hpd(p, phitil_t * czz);
  const cxmat phitil = kron(phi.phi, eye_m);
  const double mse_t = lmmse_mse_of_phi(phi_t, czz, sigma2, M);
  return mse_t + surrogate_j(a, phitil, czz) - surrogate_j(a, phitil_t, czz);
}

MmResult mm_optimize_phase(const cxmat& czz, double sigma2, int M, int K,
                           const PhaseShiftMatrix& init, double epsilon, int max_iter) {
  if (init.T_p != K + 1)
    throw InsufficientPilots("mm_optimize_phase: requires T_p = K+1");
  if (init.K != K) throw NumericalError("mm_optimize_phase: init K mismatch");
  check_phi_vs_czz(init, czz, sigma2, M);
  init.validate();
  if (!(epsilon > 0.0)) throw NumericalError("mm_optimize_phase: epsilon must be > 0");

  const cxmat eye_m = cxmat::Identity(M, M);
  const double cnorm = one_norm(czz);

  MmResult res;
  res.phi = init;
  res.phi.kind = PhiKind::mm_optimized;
  res.trace.epsilon = epsilon;
  double mse = lmmse_mse_of_phi(res.phi, czz, sigma2, M);
  res.trace.mse_per_iter.push_back(mse);

  for (int it = 0; it < max_iter; ++it) {
    const cxmat phitil = kron(res.phi.phi, eye_m);
    cxmat p = phitil * czz * phitil.adjoint();
    p.diagonal().array() += sigma2;
    p = ((p + p.adjoint()) * 0.5).eval();
    const cxmat a = solve_hpd(p, phitil * czz);
    const cxmat aah = a * a.adjoint();
    const double lambda = cnorm * one_norm(aah);
    const cxmat b = lambda * phitil - aah * phitil * czz + a * czz;

    // Collapse the M x M structure: Btil(t,k) = sum_i B(t*M+i, k*M+i).
    cxmat btil = cxmat::Zero(K + 1, K + 1);
    for (int i = 0; i < M; ++i)
      btil += b(Eigen::seqN(i, K + 1, M), Eigen::seqN(i, K + 1, M));

    cxmat next(K + 1, K + 1);
    next.col(0).setOnes();
    for (int t = 0; t <= K; ++t)
      for (int k = 1; k <= K; ++k) {
        const cxd v = btil(t, k);
        const double mag = std::abs(v);
        next(t, k) = (mag > 0.0) ? v / mag : cxd(1.0, 0.0);  // phase of 0 is 0
      }

    res.phi.phi = next;
    const double mse_next = lmmse_mse_of_phi(res.phi, czz, sigma2, M);
    if (mse_next > mse + 1e-9 * std::max(1.0, std::abs(mse)))
      throw NonMonotone("mm_optimize_phase: objective increased from " + std::to_string(mse) +
                        " to " + std::to_string(mse_next));
    res.trace.mse_per_iter.push_back(mse_next);
    res.trace.lambda_per_iter.push_back(lambda);
    res.trace.iterations = it + 1;
    const double drop = mse - mse_next;
    mse = mse_next;
    if (drop <= epsilon) {
      res.trace.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace lisce
