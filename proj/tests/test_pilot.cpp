#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lisce/channel.hpp"
#include "lisce/errors.hpp"
#include "lisce/linalg.hpp"
#include "lisce/pilot.hpp"

using namespace lisce;

TEST_CASE("2x2 DFT training matrix") {
  const PhaseShiftMatrix phi = dft_phase_matrix(2, 1);
  CHECK(std::abs(phi.phi(0, 0) - cxd(1, 0)) == 0.0);
  CHECK(std::abs(phi.phi(0, 1) - cxd(1, 0)) < 1e-15);
  CHECK(std::abs(phi.phi(1, 0) - cxd(1, 0)) == 0.0);
  CHECK(std::abs(phi.phi(1, 1) - cxd(-1, 0)) < 1e-15);
}

TEST_CASE("DFT training is orthogonal with an all-ones first column") {
  for (const auto [tp, k] : {std::pair{11, 10}, std::pair{16, 10}, std::pair{3, 2}}) {
    const PhaseShiftMatrix phi = dft_phase_matrix(tp, k);
    CHECK((phi.phi.col(0) - cxvec::Ones(tp)).cwiseAbs().maxCoeff() == 0.0);
    for (int t = 0; t < tp; ++t)
      for (int c = 0; c <= k; ++c) CHECK(std::abs(std::abs(phi.phi(t, c)) - 1.0) < 1e-12);
    const cxmat gram = phi.phi.adjoint() * phi.phi;
    CHECK((gram - static_cast<double>(tp) * cxmat::Identity(k + 1, k + 1))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    phi.validate();
  }
}

TEST_CASE("too few pilot slots") {
  CHECK_THROWS_AS(dft_phase_matrix(10, 10), InsufficientPilots);
  CHECK_THROWS_AS(onoff_phase_matrix(5, 8), InsufficientPilots);
}

TEST_CASE("onoff switching matrix is unimodular at T_p = K+1") {
  const PhaseShiftMatrix phi = onoff_phase_matrix(4, 3);
  phi.validate();
  CHECK((phi.phi.col(0) - cxvec::Ones(4)).cwiseAbs().maxCoeff() == 0.0);
  // Row 0 all elements off; row t switches on exactly element t.
  for (int t = 1; t <= 3; ++t)
    for (int k = 1; k <= 3; ++k)
      CHECK(phi.phi(t, k) == (t == k ? cxd(1, 0) : cxd(0, 0)));
  CHECK(std::abs(phi.phi.determinant() - cxd(1, 0)) < 1e-12);
}

TEST_CASE("random phase matrices live on the unit circle") {
  RngStream rng = make_stream(4, StreamTag::mm_init, 0);
  const PhaseShiftMatrix phi = random_phase_matrix(5, 4, rng);
  phi.validate();
  CHECK((phi.phi.col(0) - cxvec::Ones(5)).cwiseAbs().maxCoeff() == 0.0);
  for (int t = 0; t < 5; ++t)
    for (int k = 1; k <= 4; ++k) CHECK(std::abs(std::abs(phi.phi(t, k)) - 1.0) < 1e-12);
  RngStream rng2 = make_stream(4, StreamTag::mm_init, 0);
  CHECK((random_phase_matrix(5, 4, rng2).phi - phi.phi).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validate rejects malformed matrices") {
  PhaseShiftMatrix bad{2, 1, PhiKind::random, cxmat::Ones(2, 2)};
  bad.phi(0, 1) = cxd(2, 0);
  CHECK_THROWS_AS(bad.validate(), NumericalError);
  PhaseShiftMatrix badcol{2, 1, PhiKind::random, cxmat::Ones(2, 2)};
  badcol.phi(0, 0) = cxd(-1, 0);
  CHECK_THROWS_AS(badcol.validate(), NumericalError);
  PhaseShiftMatrix badonoff{2, 1, PhiKind::onoff, cxmat::Ones(2, 2)};
  badonoff.phi(0, 1) = cxd(0.5, 0);
  CHECK_THROWS_AS(badonoff.validate(), NumericalError);
}

TEST_CASE("scalar closed form: MSE(phi) = 6/(9 - |phi_1 + phi_2|^2)") {
  // M = 1, K = 1, C = I_2, sigma2 = 1, Phi = [[1, a], [1, b]] with |a|=|b|=1:
  // error covariance (I + Phi^H Phi)^{-1} has trace 6/(9 - |a+b|^2).
  const cxmat czz = cxmat::Identity(2, 2);
  RngStream rng = make_stream(8, StreamTag::mm_init, 1);
  for (int probe = 0; probe < 20; ++probe) {
    const PhaseShiftMatrix phi = random_phase_matrix(2, 1, rng);
    const cxd s = phi.phi(0, 1) + phi.phi(1, 1);
    const double closed = 6.0 / (9.0 - std::norm(s));
    CHECK(lmmse_mse_of_phi(phi, czz, 1.0, 1) == doctest::Approx(closed).epsilon(1e-12));
  }
  // The DFT design zeroes the column sum and attains the minimum 2/3.
  CHECK(lmmse_mse_of_phi(dft_phase_matrix(2, 1), czz, 1.0, 1) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("surrogate is tangent at the expansion point and majorizes elsewhere") {
  CorrelationProfile p{2, 3, 0.6, 0.6, 0.6};
  const ChannelModel model(p);
  const double sigma2 = 2.0;
  RngStream rng = make_stream(8, StreamTag::mm_init, 2);
  for (int probe = 0; probe < 30; ++probe) {
    const PhaseShiftMatrix phi_t = random_phase_matrix(4, 3, rng);
    const PhaseShiftMatrix phi = random_phase_matrix(4, 3, rng);
    const double j_t = lmmse_mse_of_phi(phi_t, model.czz(), sigma2, 2);
    const double j = lmmse_mse_of_phi(phi, model.czz(), sigma2, 2);
    CHECK(surrogate_value(phi_t, phi_t, model.czz(), sigma2, 2) ==
          doctest::Approx(j_t).epsilon(1e-9));
    CHECK(surrogate_value(phi, phi_t, model.czz(), sigma2, 2) >= j - 1e-9 * std::abs(j));
  }
}

TEST_CASE("MM minimizer reaches the scalar optimum") {
  const cxmat czz = cxmat::Identity(2, 2);
  RngStream rng = make_stream(8, StreamTag::mm_init, 3);
  const PhaseShiftMatrix init = random_phase_matrix(2, 1, rng);
  const MmResult res = mm_optimize_phase(czz, 1.0, 1, 1, init, 1e-10, 500);
  CHECK(res.trace.converged);
  CHECK(res.trace.mse_per_iter.back() >= 2.0 / 3.0);
  CHECK(res.trace.mse_per_iter.back() == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(res.trace.mse_per_iter.front() ==
        doctest::Approx(lmmse_mse_of_phi(init, czz, 1.0, 1)).epsilon(1e-12));
  res.phi.validate();
}

TEST_CASE("MM traces never increase and log one lambda per iteration") {
  CorrelationProfile p{2, 3, 0.7, 0.4, 0.5};
  const ChannelModel model(p);
  RngStream rng = make_stream(8, StreamTag::mm_init, 4);
  const PhaseShiftMatrix init = random_phase_matrix(4, 3, rng);
  const MmResult res = mm_optimize_phase(model.czz(), 5.0, 2, 3, init);
  REQUIRE(res.trace.mse_per_iter.size() ==
          static_cast<std::size_t>(res.trace.iterations) + 1);
  REQUIRE(res.trace.lambda_per_iter.size() ==
          static_cast<std::size_t>(res.trace.iterations));
  for (std::size_t i = 1; i < res.trace.mse_per_iter.size(); ++i)
    CHECK(res.trace.mse_per_iter[i] <= res.trace.mse_per_iter[i - 1] + 1e-12);
  for (double l : res.trace.lambda_per_iter) CHECK(l > 0.0);
  // The optimized matrix evaluates to exactly the last trace entry.
  CHECK(lmmse_mse_of_phi(res.phi, model.czz(), 5.0, 2) ==
        doctest::Approx(res.trace.mse_per_iter.back()).epsilon(1e-12));
}

TEST_CASE("MM requires the square training budget") {
  const cxmat czz = cxmat::Identity(4, 4);
  const PhaseShiftMatrix init = dft_phase_matrix(3, 1);
  CHECK_THROWS_AS(mm_optimize_phase(czz, 1.0, 2, 1, init, 1e-6, 50), InsufficientPilots);
}

TEST_CASE("DFT start is already stationary") {
  CorrelationProfile p{2, 4, 0.6, 0.6, 0.6};
  const ChannelModel model(p);
  const PhaseShiftMatrix dft = dft_phase_matrix(5, 4);
  const MmResult res = mm_optimize_phase(model.czz(), 10.0, 2, 4, dft, 1e-6, 100);
  const double start = res.trace.mse_per_iter.front();
  const double end = res.trace.mse_per_iter.back();
  CHECK(std::abs(start - end) <= 1e-6 * start);
}
