#pragma once

// Spatially correlated MISO channel with a reflecting surface in the loop.
// One ChannelModel instance caches the correlation square roots for a
// profile; every draw then costs three small GEMMs.

#include "lisce/rng.hpp"
#include "lisce/types.hpp"

namespace lisce {

struct CorrelationProfile {
  int M = 10;      // base station antennas
  int K = 10;      // surface elements
  double rho1 = 0.6;  // BS side, R_ub
  double rho2 = 0.6;  // BS side of the surface link, R_lb
  double rho3 = 0.6;  // surface side, S_lb
  void validate() const;
  bool operator==(const CorrelationProfile&) const = default;
};

struct ChannelRealization {
  cxvec h_d;   // direct channel, M
  cxmat H_lb;  // surface-to-BS channel, M x K
  cxvec h_ul;  // user-to-surface channel, K
  cxmat V;     // cascaded channel H_lb * diag(h_ul), M x K
  cxvec z;     // stacked [h_d; vec(V)], M(K+1)
};

// [R]_ij = rho^|i-j|. rho must lie in [0, 1).
cxmat exp_corr_matrix(int n, double rho);

class ChannelModel {
 public:
  explicit ChannelModel(CorrelationProfile p);

  const CorrelationProfile& profile() const { return p_; }
  ChannelRealization sample(RngStream& rng) const;

  // Covariance of z: blkdiag(R_ub, R_lb, ..., R_lb). The cascaded blocks
  // collapse to R_lb because S_lb has a unit diagonal; the constructor
  // checks that property once per profile.
  const cxmat& czz() const { return czz_; }

  const cxmat& r_ub() const { return r_ub_; }
  const cxmat& r_lb() const { return r_lb_; }
  const cxmat& s_lb() const { return s_lb_; }

 private:
  CorrelationProfile p_;
  cxmat r_ub_, r_lb_, s_lb_;
  cxmat r_ub_sqrt_, r_lb_sqrt_, s_lb_sqrt_;
  cxmat czz_;
};

cxmat build_czz(const CorrelationProfile& p);

}  // namespace lisce
