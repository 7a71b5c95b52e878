#pragma once

// Dense complex linear algebra kernels used across the library. Thin,
// validated wrappers around Eigen so that structural preconditions
// (hermitian-ness, definiteness) fail loudly instead of propagating NaNs.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>

#include "lisce/errors.hpp"
#include "lisce/types.hpp"

namespace lisce {

// Kronecker product, a (p x q) and b (m x n) -> (p*m x q*n).
template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedA::Scalar,
                                                      typename DerivedB::Scalar>::ReturnType;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                            a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Induced 1-norm: max absolute column sum. Zero for 0x0 input.
template <typename Derived>
double one_norm(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

inline bool is_hermitian(const cxmat& a, double rel_tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  if (a.rows() == 0) return true;
  const double scale = a.cwiseAbs().maxCoeff();
  const double dev = (a - a.adjoint()).cwiseAbs().maxCoeff();
  return dev <= rel_tol * std::max(scale, 1e-300);
}

inline void require_hermitian(const cxmat& a, const char* who) {
  if (!is_hermitian(a))
    throw NotHermitian(std::string(who) + ": matrix is not hermitian within 1e-10 relative");
}

// Eigendecomposition of a hermitian matrix. Eigenvalues ascending, columns of
// the second element are the matching orthonormal eigenvectors.
inline std::pair<revec, cxmat> eig_hermitian(const cxmat& a) {
  require_hermitian(a, "eig_hermitian");
  Eigen::SelfAdjointEigenSolver<cxmat> es(a);
  if (es.info() != Eigen::Success)
    throw NumericalError("eig_hermitian: eigensolver failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

// Hermitian PSD square root via eigendecomposition. Eigenvalues in
// [-1e-10, 0) are treated as rounding noise and clamped to zero; anything
// more negative means the input was not PSD.
inline cxmat herm_sqrt(const cxmat& r) {
  auto [lam, u] = eig_hermitian(r);
  revec s(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < -1e-10)
      throw NotPsd("herm_sqrt: eigenvalue " + std::to_string(lam[i]) + " below -1e-10");
    s[i] = std::sqrt(std::max(lam[i], 0.0));
  }
  cxmat out = u * s.asDiagonal() * u.adjoint();
  // Symmetrize away the last ulps so downstream hermitian checks never trip.
  out = ((out + out.adjoint()) * 0.5).eval();
  return out;
}

// Solve a X = b for hermitian positive definite a via Cholesky.
inline cxmat solve_hpd(const cxmat& a, const cxmat& b) {
  require_hermitian(a, "solve_hpd");
  if (a.rows() != b.rows()) throw NumericalError("solve_hpd: dimension mismatch");
  Eigen::LLT<cxmat> llt(a);
  const double n = static_cast<double>(a.rows());
  if (llt.info() != Eigen::Success)
    throw NotPd("solve_hpd: cholesky factorization failed (matrix not positive definite)");
  // Near-singular inputs pass LLT; gate the smallest squared pivot instead.
  const double floor = 1e-12 * std::abs(a.trace().real()) / std::max(n, 1.0);
  const double min_pivot = llt.matrixLLT().diagonal().real().minCoeff();
  if (!(min_pivot * min_pivot > floor) && a.rows() > 0)
    throw NotPd("solve_hpd: pivot below 1e-12 * trace/n floor");
  return llt.solve(b);
}

// tr(a^{-1}) for hermitian positive definite a, computed through the
// Cholesky factor rather than an explicit inverse.
inline double trace_inverse_hpd(const cxmat& a) {
  cxmat eye = cxmat::Identity(a.rows(), a.cols());
  return solve_hpd(a, eye).trace().real();
}

inline bool all_finite(const cxmat& a) { return a.allFinite(); }

}  // namespace lisce
