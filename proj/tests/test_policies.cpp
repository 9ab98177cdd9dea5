#include <doctest.h>

#include <cmath>

#include "ehalloc/errors.hpp"
#include "ehalloc/estimator.hpp"
#include "ehalloc/harness.hpp"
#include "ehalloc/policies.hpp"
#include "ehalloc/solver.hpp"
#include "ehalloc/validation.hpp"
#include "ehalloc/waterfill.hpp"

using namespace ehalloc;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidConfig;
}

Eigen::VectorXd lowpass_arrivals() {
  Eigen::VectorXd E = Eigen::VectorXd::Zero(16);
  for (int t : {3, 7, 11, 15}) E(t) = 1.0;
  return E;
}

}  // namespace

TEST_SUITE("policies") {
  TEST_CASE("majorization predicate") {
    CHECK(is_majorized(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(3, 2, 1)));
    CHECK(is_majorized(Eigen::Vector3d(3, 2, 1), Eigen::Vector3d(1, 2, 3)));
    CHECK(is_majorized(Eigen::Vector3d::Constant(2), Eigen::Vector3d(1, 2, 3)));
    CHECK(is_majorized(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0, 6, 0)));
    CHECK_FALSE(is_majorized(Eigen::Vector3d(0, 6, 0), Eigen::Vector3d(1, 2, 3)));
    CHECK_FALSE(is_majorized(Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(1, 1, 2)));
    CHECK(kind_of([] { is_majorized(Eigen::Vector3d::Ones(), Eigen::Vector2d::Ones()); }) == ErrorKind::LengthMismatch);
  }

  TEST_CASE("staircase") {
    const auto stair = [](const Eigen::VectorXd& E) {
      return most_majorized(FeasibleRegion(Eigen::VectorXd::Ones(E.size()), EnergyTrace(E))).a;
    };
    CHECK((stair(Eigen::Vector4d(3, 0, 0, 1)) - Eigen::Vector4d::Ones()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((stair(Eigen::Vector4d(1, 0, 3, 0)) - Eigen::Vector4d(0.5, 0.5, 1.5, 1.5)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((stair(Eigen::Vector4d::Constant(0.7)) - Eigen::Vector4d::Constant(0.7)).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::Vector4d sigma(2, 1, 0.5, 1);
    const PowerAllocation scaled = most_majorized(FeasibleRegion(sigma, EnergyTrace(Eigen::Vector4d(3, 0, 0, 1))));
    CHECK((scaled.energy - Eigen::Vector4d::Ones()).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("staircase is majorized by random feasible profiles") {
    Engine gen(5);
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd E = random_arrivals(16, gen);
      const Eigen::VectorXd stair = most_majorized(FeasibleRegion(Eigen::VectorXd::Ones(16), EnergyTrace(E))).energy;
      for (int r = 0; r < 200; ++r) CHECK(is_majorized(stair, random_feasible_profile(E, gen)));
    }
  }

  TEST_CASE("parameter greedy") {
    Eigen::Vector3cd h(1, 2, std::sqrt(2.0));
    const FeasibleRegion region(Eigen::Vector3d::Ones(), EnergyTrace(Eigen::Vector3d::Ones()));
    CHECK((parameter_greedy(region, ChannelTrace(h)).a - Eigen::Vector3d(0, 2, 1)).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::Vector4cd rising(0.5, 1, 1.5, 2);
    const FeasibleRegion r4(Eigen::Vector4d::Ones(), EnergyTrace(Eigen::Vector4d(1, 2, 0, 1)));
    CHECK((parameter_greedy(r4, ChannelTrace(rising)).a - Eigen::Vector4d(0, 0, 0, 4)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("greedy") {
    const FeasibleRegion region(Eigen::Vector3d::Ones(), EnergyTrace(Eigen::Vector3d(1, 0, 2)));
    CHECK(greedy_policy(region).a == Eigen::Vector3d(1, 0, 2));
    const FeasibleRegion zero_var(Eigen::Vector3d(1, 0, 1), EnergyTrace(Eigen::Vector3d(1, 1, 0)));
    CHECK((greedy_policy(zero_var).a - Eigen::Vector3d(1, 0, 1)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(kind_of([&] { greedy_policy(zero_var, true); }) == ErrorKind::ZeroVarianceWithEnergy);
    const FeasibleRegion constant(Eigen::Vector4d::Ones(), EnergyTrace(Eigen::Vector4d::Constant(0.5)));
    CHECK((greedy_policy(constant).a - most_majorized(constant).a).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("equidistant low-pass example") {
    const CovarianceModel m = build_lowpass_cwss(16, 4, 16.0);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = ChannelTrace::unit(16);
    const EnergyTrace energy(lowpass_arrivals());
    const NoiseModel noise(1e-3);
    const Problem problem{m, sp, h, energy, noise};
    const PolicyResult eq = run_policy(PolicySpec::parse("equidistant"), problem);
    Eigen::VectorXd expected = lowpass_arrivals();
    CHECK((eq.alloc.a - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(eq.normalized_mse == doctest::Approx(9.99e-4).epsilon(1e-3));
    const PolicyResult opt = run_policy(PolicySpec::parse("optimal"), problem);
    CHECK(opt.mse == doctest::Approx(eq.mse).epsilon(1e-7));
  }

  TEST_CASE("equidistant with constant arrivals") {
    const CovarianceModel m = build_lowpass_cwss(8, 2, 8.0);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = ChannelTrace::unit(8);
    const EnergyTrace energy(Eigen::VectorXd::Constant(8, 0.25));
    const NoiseModel noise(0.01);
    const Problem problem{m, sp, h, energy, noise};
    const PolicyResult eq = run_policy(PolicySpec::parse("equidistant"), problem);
    CHECK(eq.alloc.a(3) == doctest::Approx(1.0));
    CHECK(eq.alloc.a(7) == doctest::Approx(1.0));
    const PolicyResult uniform = run_policy(PolicySpec::parse("most-majorized"), problem);
    CHECK(eq.mse == doctest::Approx(uniform.mse).epsilon(1e-10));
  }

  TEST_CASE("equidistant refusals") {
    const CovarianceModel m = build_lowpass_cwss(8, 2, 8.0);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = ChannelTrace::unit(8);
    const NoiseModel noise(0.01);
    const EnergyTrace none(Eigen::VectorXd::Zero(8));
    CHECK(kind_of([&] { run_policy(PolicySpec::parse("equidistant"), Problem{m, sp, h, none, noise}); }) ==
          ErrorKind::InfeasibleRegion);
    Eigen::VectorXd late = Eigen::VectorXd::Zero(8);
    late(7) = 1.0;
    const EnergyTrace late_energy(late);
    PolicySpec early = PolicySpec::parse("equidistant");
    early.delay = 0;
    CHECK(kind_of([&] { run_policy(early, Problem{m, sp, h, late_energy, noise}); }) == ErrorKind::PlanInvalid);
    CHECK(kind_of([] { SamplingPlan::make(8, 3); }) == ErrorKind::PlanInvalid);
    CHECK(kind_of([] { SamplingPlan::make(8, 2, 4); }) == ErrorKind::DelayOutOfRange);
    const SamplingPlan plan = SamplingPlan::make(8, 2);
    CHECK(plan.sample_slots() == std::vector<int>{3, 7});
  }

  TEST_CASE("sliding window upper bound policy") {
    const CovarianceModel m = build_lowpass_cwss(16, 4, 16.0);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = ChannelTrace::unit(16);
    const EnergyTrace energy(lowpass_arrivals());
    const NoiseModel noise(1e-3);
    const Problem problem{m, sp, h, energy, noise};
    const PolicyResult un = run_policy(PolicySpec::parse("upper-16"), problem);
    Eigen::VectorXd expected = Eigen::VectorXd::Constant(16, 0.25);
    expected.head(3).setZero();
    expected(15) = 1.0;
    CHECK((un.alloc.a - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(un.normalized_mse == doctest::Approx(1.16e-3).epsilon(0.01));

    const FeasibleRegion region(m.variances(), energy);
    CHECK((sliding_window_upper(region, h, noise, 1).a - greedy_policy(region).a).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(kind_of([&] { sliding_window_upper(region, h, noise, 5); }) == ErrorKind::WindowError);
  }

  TEST_CASE("upper-n is exact for diagonal models") {
    Engine gen(17);
    for (int k = 0; k < 5; ++k) {
      const int n = 6;
      Eigen::VectorXd sigma(n);
      for (int t = 0; t < n; ++t) sigma(t) = 0.3 + 0.3 * t;
      const CovarianceModel m(Eigen::MatrixXcd(sigma.cast<cplx>().asDiagonal()));
      const SpectrumDecomposition sp = reduced_evd(m);
      const ChannelTrace h = sample_rayleigh_channel(n, gen());
      const EnergyTrace energy(random_arrivals(n, gen));
      const NoiseModel noise(0.05);
      const Problem problem{m, sp, h, energy, noise};
      CHECK(run_policy(PolicySpec::parse("upper-n"), problem).mse ==
            doctest::Approx(run_policy(PolicySpec::parse("optimal"), problem).mse).epsilon(1e-7));
    }
  }

  TEST_CASE("sliding window lower bound policy") {
    const CovarianceModel white = build_white(8, 8.0);
    const SpectrumDecomposition sp = reduced_evd(white);
    const ChannelTrace h = ChannelTrace::unit(8);
    const FeasibleRegion region(white.variances(), EnergyTrace(Eigen::VectorXd::LinSpaced(8, 1.0, 0.0)));
    const NoiseModel noise(0.1);
    CHECK((sliding_window_lower(sp, region, h, noise, 8).a - most_majorized(region).a).cwiseAbs().maxCoeff() < 1e-9);

    const ChannelTrace fading = sample_rayleigh_channel(8, 3);
    CHECK((sliding_window_lower(sp, region, fading, noise, 4).a - sliding_window_upper(region, fading, noise, 4).a)
              .cwiseAbs()
              .maxCoeff() < 1e-9);

    const CovarianceModel geo = random_haar_covariance(8, Eigen::Vector2d(6, 2), 1);
    CHECK(kind_of([&] { sliding_window_lower(reduced_evd(geo), region, h, noise, 8); }) ==
          ErrorKind::FlatSpectrumRequired);
  }

  TEST_CASE("water-filling on a fading window matches a grid search") {
    const Eigen::Vector4d c(1.0, 0.8, 1.2, 0.5), b(30.0, 5.0, 12.0, 50.0);
    const Eigen::Vector4d cumulative(0.2, 0.2, 0.9, 1.0);
    const Eigen::VectorXd J = directional_waterfill(c, b, cumulative);
    auto cost = [&](const Eigen::Vector4d& x) {
      double f = 0.0;
      for (int j = 0; j < 4; ++j) f += c(j) / (1.0 + b(j) * x(j));
      return f;
    };
    double best = std::numeric_limits<double>::infinity();
    const double step = 1e-2;
    for (double x0 = 0; x0 <= 0.2 + 1e-12; x0 += step) {
      for (double x1 = 0; x0 + x1 <= 0.2 + 1e-12; x1 += step) {
        for (double x2 = 0; x0 + x1 + x2 <= 0.9 + 1e-12; x2 += step) {
          best = std::min(best, cost(Eigen::Vector4d(x0, x1, x2, 1.0 - x0 - x1 - x2)));
        }
      }
    }
    CHECK(cost(J) <= best + 1e-12);
    CHECK(J.sum() == doctest::Approx(1.0));
    CHECK(J.head(1).sum() <= 0.2 + 1e-12);
    CHECK(J.head(3).sum() <= 0.9 + 1e-12);
  }

  TEST_CASE("policy identifiers") {
    CHECK(PolicySpec::parse("upper-16").window_for(16) == 16);
    CHECK(PolicySpec::parse("upper-n").window_for(64) == 64);
    CHECK(PolicySpec::parse("upper-n/2").window_for(64) == 32);
    CHECK(PolicySpec::parse("lower-4").kind == PolicyKind::Lower);
    CHECK(PolicySpec::parse("param-greedy").name() == "param-greedy");
    CHECK(PolicySpec::parse("upper-n/2").name() == "upper-n/2");
    CHECK(kind_of([] { PolicySpec::parse("upper-0"); }) == ErrorKind::InvalidConfig);
    CHECK(kind_of([] { PolicySpec::parse("fastest"); }) == ErrorKind::InvalidConfig);
  }

  TEST_CASE("zero energy") {
    const CovarianceModel m = build_white(4, 4.0);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = ChannelTrace::unit(4);
    const EnergyTrace none(Eigen::Vector4d::Zero());
    const NoiseModel noise(0.1);
    const Problem problem{m, sp, h, none, noise};
    const PolicyResult g = run_policy(PolicySpec::parse("greedy"), problem);
    CHECK(g.alloc.a == Eigen::Vector4d::Zero());
    CHECK(g.normalized_mse == doctest::Approx(1.0));
    for (const char* id : {"optimal", "relaxed", "most-majorized", "param-greedy", "upper-2", "lower-n"}) {
      CHECK(kind_of([&] { run_policy(PolicySpec::parse(id), problem); }) == ErrorKind::InfeasibleRegion);
    }
  }
}
