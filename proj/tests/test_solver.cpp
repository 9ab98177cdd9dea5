#include <doctest.h>

#include <cmath>

#include "ehalloc/energy.hpp"
#include "ehalloc/errors.hpp"
#include "ehalloc/estimator.hpp"
#include "ehalloc/harness.hpp"
#include "ehalloc/policies.hpp"
#include "ehalloc/qp.hpp"
#include "ehalloc/solver.hpp"
#include "ehalloc/validation.hpp"

using namespace ehalloc;

TEST_SUITE("solver") {
  TEST_CASE("feasibility checks") {
    const FeasibleRegion region(Eigen::Vector4d::Ones(), EnergyTrace(Eigen::Vector4d(1, 0, 3, 0)));
    CHECK(check_feasible(Eigen::Vector4d(1, 0, 3, 0), region).feasible);
    CHECK(check_feasible(Eigen::Vector4d(0.5, 0.5, 1.5, 1.5), region).feasible);
    CHECK_FALSE(check_feasible(Eigen::Vector4d::Zero(), region).feasible);
    CHECK_FALSE(check_feasible(Eigen::Vector4d::Zero(), region.relaxed()).feasible);
    const FeasibilityVerdict early = check_feasible(Eigen::Vector4d(2, 0, 2, 0), region);
    CHECK_FALSE(early.feasible);
    CHECK(early.worst_index == 0);
    CHECK(early.worst_violation == doctest::Approx(1.0));
    CHECK(check_feasible(Eigen::Vector4d(2, 0, 2, 0), region.relaxed()).feasible);
  }

  TEST_CASE("exact projection matches Dykstra on a box-like polytope") {
    const FeasibleRegion region(Eigen::Vector4d(1, 2, 0.5, 1), EnergyTrace(Eigen::Vector4d(1, 1, 2, 0.5)));
    const ReducedPolytope poly = ReducedPolytope::from_region(region);
    const LinearConstraints cons = LinearConstraints::from_polytope(poly);
    const Eigen::Vector4d y(3.0, -1.0, 0.4, 2.0);
    const QpResult exact = project_exact(poly, cons, y, poly.restrict(Eigen::Vector4d(1, 0.5, 4, 0.5)));
    const DykstraResult dyk = project_dykstra(poly, y, 1e-14, 1000000);
    REQUIRE(exact.converged);
    REQUIRE(dyk.converged);
    CHECK((exact.x - dyk.x).cwiseAbs().maxCoeff() < 1e-7);
  }

  TEST_CASE("nnls") {
    Eigen::MatrixXd C(3, 2);
    C << 1, 0, 0, 1, 1, 1;
    const Eigen::VectorXd x = nnls(C, Eigen::Vector3d(1, -1, 0));
    CHECK(x(1) == doctest::Approx(0.0));
    CHECK(x(0) == doctest::Approx(0.5));
  }

  TEST_CASE("white source balances the energy") {
    const CovarianceModel m = build_white(4, 4.0);
    const FeasibleRegion region(m.variances(), EnergyTrace(Eigen::Vector4d(3, 0, 0, 1)));
    const SolveOutcome out = solve_optimal(reduced_evd(m), ChannelTrace::unit(4), region, NoiseModel(0.1));
    CHECK(out.diagnostics.converged);
    CHECK((out.a - Eigen::Vector4d::Ones()).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("flat spectrum relaxed optimum") {
    const CovarianceModel m = build_lowpass_cwss(8, 2, 8.0);
    const FeasibleRegion region(m.variances(), EnergyTrace(Eigen::VectorXd::LinSpaced(8, 0.0, 1.4)));
    const NoiseModel noise(0.2);
    const SolveOutcome out = solve_relaxed(reduced_evd(m), ChannelTrace::unit(8), region, noise);
    const double E = region.energy.total();
    CHECK(out.objective == doctest::Approx(8.0 / (1.0 + noise.gamma() * E / 2)).epsilon(1e-9));
    // the uniform allocation is one of the optima
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(8, E / 8.0);
    CHECK(mmse_woodbury(reduced_evd(m), ChannelTrace::unit(8), uniform, noise) == doctest::Approx(out.objective).epsilon(1e-9));
  }

  TEST_CASE("single slot") {
    const CovarianceModel m = build_white(1, 2.0);
    const FeasibleRegion region(m.variances(), EnergyTrace(Eigen::VectorXd::Constant(1, 3.0)));
    const NoiseModel noise(0.5);
    const SolveOutcome out = solve_relaxed(reduced_evd(m), ChannelTrace::unit(1), region, noise);
    CHECK(out.a(0) == doctest::Approx(1.5));
    CHECK(out.objective == doctest::Approx(2.0 / (1.0 + 2.0 * 3.0)));
  }

  TEST_CASE("certificates, relaxation and determinism on random instances") {
    Engine gen(2024);
    for (int k = 0; k < 10; ++k) {
      const int n = 2 + k % 7;
      const CovarianceModel m = random_model(n, 1 + k % n, gen);
      const SpectrumDecomposition sp = reduced_evd(m);
      const ChannelTrace h = sample_rayleigh_channel(n, gen());
      const NoiseModel noise(0.01);
      const FeasibleRegion region(m.variances(), EnergyTrace(random_arrivals(n, gen)));
      const SolveOutcome a = solve_optimal(sp, h, region, noise);
      const SolveOutcome b = solve_optimal(sp, h, region, noise);
      const SolveOutcome r = solve_relaxed(sp, h, region, noise);
      CHECK(a.diagnostics.converged);
      CHECK(a.diagnostics.kkt_residual <= 1e-8);
      CHECK(check_feasible(a.a, region).feasible);
      CHECK(a.a == b.a);
      CHECK(r.objective <= a.objective + 1e-9);
      CHECK(a.objective <= mmse_woodbury(sp, h, greedy_policy(region).a, noise) + 1e-12);
    }
  }

  TEST_CASE("zero energy is infeasible") {
    const CovarianceModel m = build_white(3, 3.0);
    const FeasibleRegion region(m.variances(), EnergyTrace(Eigen::Vector3d::Zero()));
    try {
      solve_optimal(reduced_evd(m), ChannelTrace::unit(3), region, NoiseModel(1.0));
      FAIL("expected InfeasibleRegion");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InfeasibleRegion);
    }
  }

  TEST_CASE("zero-variance slots stay silent") {
    const CovarianceModel m = build_rank_one(Eigen::Vector3cd(1, 0, 0), 2.0);
    const FeasibleRegion region(m.variances(), EnergyTrace(Eigen::Vector3d(1, 0, 0)));
    const SolveOutcome out = solve_optimal(reduced_evd(m), ChannelTrace::unit(3), region, NoiseModel(1.0));
    CHECK(out.a(1) == 0.0);
    CHECK(out.a(2) == 0.0);
    CHECK(out.a(0) == doctest::Approx(0.5));
  }
}
