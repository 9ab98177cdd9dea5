#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ehalloc/errors.hpp"
#include "ehalloc/signal_model.hpp"

using namespace ehalloc;

namespace {

Eigen::VectorXd sorted_desc(Eigen::VectorXd v) {
  std::sort(v.data(), v.data() + v.size(), std::greater<>());
  return v;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("signal-model") {
  TEST_CASE("static correlation with rho = 0 is the identity") {
    const CovarianceModel m = build_static_correlation(4, 0.0, 4.0);
    CHECK(max_abs(m.K() - Eigen::MatrixXcd::Identity(4, 4)) < 1e-14);
  }

  TEST_CASE("static correlation spectrum, n = 16, rho = 0.5") {
    const CovarianceModel m = build_static_correlation(16, 0.5, 16.0);
    const Eigen::VectorXd ev = eigenvalues_descending(m.K());
    CHECK(ev(0) == doctest::Approx(8.5).epsilon(1e-12));
    for (int i = 1; i < 16; ++i) CHECK(ev(i) == doctest::Approx(0.5).epsilon(1e-12));
    const SpectrumDecomposition sp = reduced_evd(m);
    CHECK(sp.rank() == 16);
  }

  TEST_CASE("static correlation below the PSD boundary is rejected") {
    try {
      build_static_correlation(3, -0.6, 3.0);
      FAIL("expected RhoOutOfRange");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::RhoOutOfRange);
    }
  }

  TEST_CASE("low-pass models") {
    CHECK(max_abs(build_lowpass_cwss(4, 4, 4.0).K() - Eigen::MatrixXcd::Identity(4, 4)) < 1e-12);
    const CovarianceModel half = build_lowpass_cwss(4, 2, 4.0);
    for (int t = 0; t < 4; ++t) CHECK(half.variances()(t) == doctest::Approx(1.0).epsilon(1e-12));
    const SpectrumDecomposition sp = reduced_evd(build_lowpass_cwss(16, 4, 16.0));
    CHECK(sp.rank() == 4);
    CHECK(sp.is_flat());
    CHECK_THROWS_AS(build_lowpass_cwss(16, 5, 16.0), Error);
  }

  TEST_CASE("circulant spectra") {
    const CirculantModel id = build_circulant(Eigen::Vector4cd(1, 0, 0, 0));
    CHECK((id.eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-12);

    const double P = 4.0;
    const CirculantModel c = build_circulant(Eigen::Vector4cd(2, 1, 0, 1) * (P / 4.0));
    const Eigen::VectorXd expected = sorted_desc(Eigen::Vector4d(4, 2, 0, 2) * (P / 4.0));
    CHECK((sorted_desc(c.eigenvalues) - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((eigenvalues_descending(c.model.K()) - expected).cwiseAbs().maxCoeff() < 1e-10);

    const double rho = 0.3;
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(8, rho);
    v(0) = 1.0;
    const CirculantModel sc = build_circulant(v);
    const Eigen::VectorXd ref = eigenvalues_descending(build_static_correlation(8, rho, 8.0).K());
    CHECK((sorted_desc(sc.eigenvalues) - ref).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("rank-one models") {
    const CovarianceModel e1 = build_rank_one(Eigen::Vector4cd(1, 0, 0, 0), 5.0);
    CHECK(std::abs(e1.K()(0, 0) - cplx(5.0)) < 1e-14);
    CHECK(max_abs(e1.K()) == doctest::Approx(5.0));

    const CovarianceModel ones = build_rank_one(Eigen::Vector3cd::Ones() / std::sqrt(3.0), 3.0);
    CHECK(max_abs(ones.K() - Eigen::MatrixXcd::Ones(3, 3)) < 1e-12);
    CHECK(reduced_evd(ones).rank() == 1);
    CHECK(reduced_evd(ones).eigenvalues(0) == doctest::Approx(3.0));
  }

  TEST_CASE("DFT matrix") {
    CHECK(std::abs(dft_matrix(1)(0, 0) - cplx(1.0)) < 1e-15);
    const Eigen::MatrixXcd F2 = dft_matrix(2);
    Eigen::Matrix2cd expected;
    expected << 1, 1, 1, -1;
    CHECK(max_abs(F2 - expected / std::sqrt(2.0)) < 1e-15);
    const Eigen::MatrixXcd F4 = dft_matrix(4);
    CHECK(max_abs(F4 * F4.adjoint() - Eigen::MatrixXcd::Identity(4, 4)) < 1e-14);
  }

  TEST_CASE("Haar covariance") {
    const Eigen::Vector4d lambda(3, 2, 1, 0.5);
    const CovarianceModel a = random_haar_covariance(4, lambda, 42);
    const CovarianceModel b = random_haar_covariance(4, lambda, 42);
    CHECK(a.K() == b.K());
    CHECK((eigenvalues_descending(a.K()) - lambda).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(a.total_power() == doctest::Approx(6.5).epsilon(1e-12));

    // flat spectrum: the diagonal averages P_x/n over unitary draws
    double mean_diag = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      mean_diag += random_haar_covariance(4, Eigen::VectorXd::Constant(4, 2.0), seed).variances()(0);
    }
    CHECK(mean_diag / 1000 == doctest::Approx(2.0).epsilon(0.01));
  }

  TEST_CASE("reduced decomposition") {
    const SpectrumDecomposition white = reduced_evd(build_white(4, 4.0));
    CHECK(white.rank() == 4);
    CHECK((white.eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-12);

    const CovarianceModel m = random_haar_covariance(6, Eigen::Vector3d(2, 1, 0.5), 7);
    const SpectrumDecomposition sp = reduced_evd(m);
    REQUIRE(sp.rank() == 3);
    CHECK(max_abs(sp.basis.adjoint() * sp.basis - Eigen::MatrixXcd::Identity(3, 3)) < 1e-10);
    CHECK(max_abs(sp.basis * sp.eigenvalues.asDiagonal() * sp.basis.adjoint() - m.K()) < 1e-9 * m.total_power());
  }

  TEST_CASE("invalid covariances are rejected") {
    Eigen::Matrix2cd not_herm;
    not_herm << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(CovarianceModel(Eigen::MatrixXcd(not_herm)), Error);
    Eigen::Matrix2cd not_psd;
    not_psd << 1, 2, 2, 1;
    CHECK_THROWS_AS(CovarianceModel(Eigen::MatrixXcd(not_psd)), Error);
    CHECK_THROWS_AS(build_rank_one(Eigen::Vector2cd(0, 0), 1.0), Error);
  }
}
