#include "lisce/channel.hpp"

#include <cmath>
#include <string>

#include "lisce/errors.hpp"
#include "lisce/linalg.hpp"

namespace lisce {

void CorrelationProfile::validate() const {
  if (M < 1 || K < 1) throw NumericalError("CorrelationProfile: M and K must be >= 1");
  for (double r : {rho1, rho2, rho3})
    if (!(r >= 0.0 && r < 1.0) || !std::isfinite(r))
      throw InvalidRho("CorrelationProfile: rho = " + std::to_string(r) + " outside [0, 1)");
}

cxmat exp_corr_matrix(int n, double rho) {
  if (n < 1) throw NumericalError("exp_corr_matrix: n must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0) || !std::isfinite(rho))
    throw InvalidRho("exp_corr_matrix: rho = " + std::to_string(rho) + " outside [0, 1)");
  cxmat r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
  return r;
}

ChannelModel::ChannelModel(CorrelationProfile p) : p_(p) {
  p_.validate();
  r_ub_ = exp_corr_matrix(p_.M, p_.rho1);
  r_lb_ = exp_corr_matrix(p_.M, p_.rho2);
  s_lb_ = exp_corr_matrix(p_.K, p_.rho3);
  r_ub_sqrt_ = herm_sqrt(r_ub_);
  r_lb_sqrt_ = herm_sqrt(r_lb_);
  s_lb_sqrt_ = herm_sqrt(s_lb_);

  // Block i of S_lb (x) R_lb equals S_lb(i,i) * R_lb; the covariance code
  // below relies on those diagonal entries being exactly one.
  for (int i = 0; i < p_.K; ++i)
    if (std::abs(s_lb_(i, i) - 1.0) > 1e-12)
      throw NumericalError("ChannelModel: S_lb diagonal is not unit, C_zz block shortcut invalid");

  const int n = p_.M * (p_.K + 1);
  czz_ = cxmat::Zero(n, n);
  czz_.topLeftCorner(p_.M, p_.M) = r_ub_;
  for (int k = 1; k <= p_.K; ++k) czz_.block(k * p_.M, k * p_.M, p_.M, p_.M) = r_lb_;
}

ChannelRealization ChannelModel::sample(RngStream& rng) const {
  const int m = p_.M, k = p_.K;
  ChannelRealization out;

  // Fixed draw order: h_d innovations, then H_lb column-major, then h_ul.
  cxvec h_wd(m);
  for (int i = 0; i < m; ++i) h_wd[i] = rng.complex_normal();
  cxmat h_w(m, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < m; ++i) h_w(i, j) = rng.complex_normal();
  out.h_ul.resize(k);
  for (int i = 0; i < k; ++i) out.h_ul[i] = rng.complex_normal();

  out.h_d = r_ub_sqrt_ * h_wd;
  out.H_lb = r_lb_sqrt_ * h_w * s_lb_sqrt_;
  out.V = out.H_lb * out.h_ul.asDiagonal();

  out.z.resize(m * (k + 1));
  out.z.head(m) = out.h_d;
  for (int j = 0; j < k; ++j) out.z.segment(m * (j + 1), m) = out.V.col(j);
  return out;
}

cxmat build_czz(const CorrelationProfile& p) { return ChannelModel(p).czz(); }

}  // namespace lisce
