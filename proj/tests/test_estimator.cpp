#include <doctest.h>

#include <cmath>

#include "ehalloc/errors.hpp"
#include "ehalloc/estimator.hpp"
#include "ehalloc/harness.hpp"
#include "ehalloc/validation.hpp"

using namespace ehalloc;

TEST_SUITE("estimator") {
  TEST_CASE("no observation leaves the prior error") {
    const CovarianceModel m = random_haar_covariance(5, Eigen::Vector3d(2, 1, 0.5), 3);
    const ChannelTrace h = sample_rayleigh_channel(5, 9);
    const NoiseModel noise(1e-2);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
    CHECK(mmse_direct(m, h, zero, noise) == doctest::Approx(m.total_power()).epsilon(1e-12));
    CHECK(mmse_woodbury(reduced_evd(m), h, zero, noise) == doctest::Approx(m.total_power()).epsilon(1e-12));
    CHECK(upper_bound_uncorrelated(m.variances(), h, zero, noise) == doctest::Approx(m.total_power()).epsilon(1e-12));
  }

  TEST_CASE("white source with static channel is separable") {
    const double s2 = 1.7, sw = 0.05;
    const CovarianceModel m = build_white(4, 4 * s2);
    const Eigen::Vector4d a(0.0, 0.3, 1.0, 2.5);
    double expected = 0.0;
    for (int t = 0; t < 4; ++t) expected += s2 / (1.0 + s2 * a(t) / sw);
    CHECK(mmse_direct(m, ChannelTrace::unit(4), a, NoiseModel(sw)) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("rank-one closed form and gradient") {
    const Eigen::Vector3cd u = Eigen::Vector3cd(cplx(1, 1), 0.5, cplx(0, -2)).normalized();
    const double P = 3.0;
    const CovarianceModel m = build_rank_one(u, P);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = sample_rayleigh_channel(3, 5);
    const NoiseModel noise(0.1);
    const Eigen::Vector3d a(0.2, 1.0, 0.7);
    double s = 0.0;
    for (int t = 0; t < 3; ++t) s += h.gain_sq()(t) * m.variances()(t) * a(t);
    const double closed = P / (1.0 + noise.gamma() * s);
    CHECK(mmse_direct(m, h, a, noise) == doctest::Approx(closed).epsilon(1e-10));
    CHECK(mmse_woodbury(sp, h, a, noise) == doctest::Approx(closed).epsilon(1e-10));
    const Eigen::VectorXd g = mmse_gradient(sp, h, a, noise);
    for (int t = 0; t < 3; ++t) {
      const double expected = -noise.gamma() * h.gain_sq()(t) * m.variances()(t) * P / std::pow(1.0 + noise.gamma() * s, 2);
      CHECK(g(t) == doctest::Approx(expected).epsilon(1e-9));
    }
  }

  TEST_CASE("woodbury agrees with the direct form") {
    Engine gen(11);
    for (int k = 0; k < 20; ++k) {
      const int n = 1 + k % 6;
      const CovarianceModel m = random_model(n, 1 + k % n, gen);
      const ChannelTrace h = sample_rayleigh_channel(n, gen());
      const NoiseModel noise(0.01 + 0.1 * (k % 3));
      const Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(n, 0.1, 2.0);
      const double d = mmse_direct(m, h, a, noise);
      CHECK(mmse_woodbury(reduced_evd(m), h, a, noise) == doctest::Approx(d).epsilon(1e-10));
    }
  }

  TEST_CASE("sampled low-pass closed form") {
    const ChannelTrace h = ChannelTrace::unit(16);
    const double mse = mmse_sampled_lowpass(16, 4, 3, Eigen::Vector4d::Ones(), h, NoiseModel(1e-3), 16.0);
    CHECK(mse == doctest::Approx(16.0 / 1001.0).epsilon(1e-12));
    CHECK(mse / 16.0 == doctest::Approx(9.99e-4).epsilon(1e-3));
    CHECK(mmse_sampled_lowpass(16, 4, 3, Eigen::Vector4d::Zero(), h, NoiseModel(1e-3), 16.0) == doctest::Approx(16.0));

    const ChannelTrace fading = sample_rayleigh_channel(12, 4);
    const Eigen::Vector3d a_bar(0.5, 1.5, 0.25);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(12);
    for (int r = 0; r < 3; ++r) a(4 * r + 1) = a_bar(r);
    const CovarianceModel m = build_lowpass_cwss(12, 3, 6.0);
    CHECK(mmse_sampled_lowpass(12, 3, 1, a_bar, fading, NoiseModel(0.02), 6.0) ==
          doctest::Approx(mmse_direct(m, fading, a, NoiseModel(0.02))).epsilon(1e-9));
    CHECK_THROWS_AS(mmse_sampled_lowpass(12, 3, 4, a_bar, fading, NoiseModel(0.02), 6.0), Error);
  }

  TEST_CASE("bounds") {
    const Eigen::Vector4d sigma(0.5, 1.0, 2.0, 1.5);
    const CovarianceModel diag(Eigen::MatrixXcd(sigma.cast<cplx>().asDiagonal()));
    const ChannelTrace h = sample_rayleigh_channel(4, 8);
    const Eigen::Vector4d a(0.3, 0.0, 1.2, 0.4);
    const NoiseModel noise(0.05);
    CHECK(upper_bound_uncorrelated(sigma, h, a, noise) == doctest::Approx(mmse_direct(diag, h, a, noise)).epsilon(1e-12));

    const CovarianceModel white = build_white(4, 4.0);
    const SpectrumDecomposition sw = reduced_evd(white);
    CHECK(lower_bound_flat(sw, white.variances(), h, a, noise) ==
          doctest::Approx(mmse_direct(white, h, a, noise)).epsilon(1e-12));

    const CovarianceModel lp = build_lowpass_cwss(8, 2, 8.0);
    const SpectrumDecomposition slp = reduced_evd(lp);
    CHECK(lower_bound_flat(slp, lp.variances(), sample_rayleigh_channel(8, 1), Eigen::VectorXd::Zero(8), noise) ==
          doctest::Approx(8.0));

    const CovarianceModel geo = random_haar_covariance(4, Eigen::Vector2d(3, 1), 2);
    CHECK_THROWS_AS(lower_bound_flat(reduced_evd(geo), geo.variances(), h, a, noise), Error);
  }

  TEST_CASE("saturated slot has a vanishing gradient") {
    const CovarianceModel m = random_haar_covariance(3, Eigen::Vector3d(1, 1, 1), 5);
    const Eigen::VectorXd g = mmse_gradient(reduced_evd(m), ChannelTrace::unit(3), Eigen::Vector3d(1e9, 0.5, 0.5), NoiseModel(0.1));
    CHECK(std::abs(g(0)) < 1e-12);
    CHECK(g(1) < 0.0);
  }

  TEST_CASE("length mismatches are rejected") {
    const CovarianceModel m = build_white(3, 3.0);
    CHECK_THROWS_AS(mmse_direct(m, ChannelTrace::unit(4), Eigen::Vector3d::Ones(), NoiseModel(1.0)), Error);
    CHECK_THROWS_AS(NoiseModel(0.0), Error);
  }
}
