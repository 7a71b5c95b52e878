#pragma once

// Training-phase configurations for the reflecting surface and the MM-based
// MSE minimizer over unit-modulus phase matrices.

#include <vector>

#include "lisce/rng.hpp"
#include "lisce/types.hpp"

namespace lisce {

enum class PhiKind { dft, onoff, random, mm_optimized };

// T_p x (K+1) training matrix. Column 0 is the direct-channel column and is
// always all ones. For every kind except onoff all entries are unit modulus;
// onoff uses {0,1} switching in columns 1..K.
struct PhaseShiftMatrix {
  int T_p = 0;
  int K = 0;
  PhiKind kind = PhiKind::dft;
  cxmat phi;
  void validate() const;
};

PhaseShiftMatrix dft_phase_matrix(int T_p, int K);
PhaseShiftMatrix onoff_phase_matrix(int T_p, int K);
PhaseShiftMatrix random_phase_matrix(int T_p, int K, RngStream& rng);

// tr((C_zz^{-1} + (Phi^H Phi (x) I_M) / sigma2)^{-1}), the LMMSE estimation
// error for a given training matrix. Computed through Cholesky solves.
double lmmse_mse_of_phi(const PhaseShiftMatrix& phi, const cxmat& czz, double sigma2, int M);

// Majorizing surrogate of the MSE around phi_t. Tangent at phi = phi_t and
// an upper bound everywhere else on the feasible set.
double surrogate_value(const PhaseShiftMatrix& phi, const PhaseShiftMatrix& phi_t,
                       const cxmat& czz, double sigma2, int M);

struct MmTrace {
  int iterations = 0;
  bool converged = false;
  double epsilon = 1e-6;
  std::vector<double> mse_per_iter;     // entry 0 is the MSE at the init
  std::vector<double> lambda_per_iter;  // one entry per iteration
};

struct MmResult {
  PhaseShiftMatrix phi;
  MmTrace trace;
};

// Minimize lmmse_mse_of_phi over unit-modulus matrices with a fixed all-ones
// first column, starting from init. Defined for T_p = K+1 only. Stops when
// the per-iteration improvement drops to epsilon or max_iter is hit; throws
// NonMonotone if the objective ever increases (that would be a bug, the
// majorize-minimize step is non-increasing by construction).
MmResult mm_optimize_phase(const cxmat& czz, double sigma2, int M, int K,
                           const PhaseShiftMatrix& init, double epsilon = 1e-6,
                           int max_iter = 500);

}  // namespace lisce
