#include "ehalloc/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "ehalloc/errors.hpp"
#include "ehalloc/harness.hpp"
#include "ehalloc/policies.hpp"
#include "ehalloc/qp.hpp"
#include "ehalloc/solver.hpp"

namespace ehalloc {

namespace {

class Checker {
 public:
  explicit Checker(SuiteResult& result) : result_(result) {}

  void expect(bool ok, const std::function<std::string()>& what) {
    ++result_.checks;
    if (!ok && result_.failures.size() < 20) result_.failures.push_back(what());
  }

 private:
  SuiteResult& result_;
};

std::string fmt(const char* label, std::uint64_t seed, double value) {
  std::ostringstream os;
  os.precision(6);
  os << label << " (seed " << seed << "): " << value;
  return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double uniform(Engine& gen, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }

int uniform_int(Engine& gen, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }

Eigen::VectorXd random_vector(int n, Engine& gen, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform(gen, lo, hi);
  return v;
}

// Flat spectrum on a random set of s DFT columns.
CovarianceModel random_flat_cwss(int n, int s, Engine& gen) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  std::shuffle(idx.begin(), idx.end(), gen);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < s; ++k) z(idx[static_cast<size_t>(k)]) = static_cast<double>(n) / s;
  return circulant_from_spectrum(z);
}

NoiseModel random_noise(Engine& gen) { return NoiseModel(std::pow(10.0, uniform(gen, -3.0, 0.0))); }

void suite_signal_model(Checker& c, std::uint64_t seed) {
  Engine gen(derive_seed(seed, 1));
  auto builder_ok = [&](const CovarianceModel& m, double P, std::uint64_t s, const char* label) {
    const Eigen::MatrixXcd& K = m.K();
    const double herm = (K - K.adjoint()).norm() / std::max(K.norm(), 1e-300);
    c.expect(herm <= 1e-12, [&] { return fmt(label, s, herm); });
    const double min_eig = eigenvalues_descending(K).minCoeff();
    c.expect(min_eig >= -1e-10 * P, [&] { return fmt(label, s, min_eig); });
    c.expect(rel(m.total_power(), P) <= 1e-12, [&] { return fmt(label, s, m.total_power()); });
  };

  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = uniform_int(g, 2, 16);
    Eigen::VectorXd z = random_vector(n, g, 0.0, 2.0);
    const CovarianceModel circ = circulant_from_spectrum(z);
    const CirculantModel built = build_circulant(circ.K().row(0).transpose());
    builder_ok(built.model, z.sum(), s, "circulant builder invariants");
    Eigen::VectorXd fast = built.eigenvalues;
    Eigen::VectorXd dense = eigenvalues_descending(built.model.K());
    std::sort(fast.data(), fast.data() + n, std::greater<>());
    const double err = (fast - dense).cwiseAbs().maxCoeff();
    c.expect(err <= 1e-9 * std::max(1.0, z.sum()), [&] { return fmt("circulant spectrum vs dense eigensolver", s, err); });
  }

  for (int trial = 0; trial < 100; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = uniform_int(g, 2, 16);
    const double rho = uniform(g, -1.0 / (n - 1), 1.0);
    const double P = uniform(g, 0.5, 20.0);
    const CovarianceModel m = build_static_correlation(n, rho, P);
    builder_ok(m, P, s, "static-correlation invariants");
    Eigen::VectorXd expected = Eigen::VectorXd::Constant(n, (P / n) * (1.0 - rho));
    expected(0) = (P / n) * (rho * (n - 1) + 1.0);
    std::sort(expected.data(), expected.data() + n, std::greater<>());
    const double err = (eigenvalues_descending(m.K()) - expected).cwiseAbs().maxCoeff();
    c.expect(err <= 1e-9 * P, [&] { return fmt("static-correlation spectrum", s, err); });
  }

  for (int n : {4, 8, 12, 16}) {
    for (int s = 1; s <= n; ++s) {
      if (n % s) continue;
      const CovarianceModel m = build_lowpass_cwss(n, s, n);
      builder_ok(m, n, static_cast<std::uint64_t>(n * 100 + s), "lowpass invariants");
      const double dev = (m.variances().array() - 1.0).abs().maxCoeff();
      c.expect(dev <= 1e-12 * n, [&] { return fmt("lowpass diagonal not constant", static_cast<std::uint64_t>(n * 100 + s), dev); });
      const SpectrumDecomposition sp = reduced_evd(m);
      c.expect(sp.rank() == s, [&] { return fmt("lowpass rank", static_cast<std::uint64_t>(n * 100 + s), sp.rank()); });
    }
  }

  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = uniform_int(g, 1, 16);
    const int rank = uniform_int(g, 1, n);
    const CovarianceModel m = random_model(n, rank, g);
    builder_ok(m, n, s, "haar covariance invariants");
    const SpectrumDecomposition sp = reduced_evd(m);
    const double orth = (sp.basis.adjoint() * sp.basis - Eigen::MatrixXcd::Identity(sp.rank(), sp.rank())).norm();
    c.expect(orth <= 1e-10, [&] { return fmt("reduced basis not orthonormal", s, orth); });
    const Eigen::MatrixXcd rebuilt = sp.basis * sp.eigenvalues.asDiagonal() * sp.basis.adjoint();
    const double recon = (rebuilt - m.K()).norm() / m.total_power();
    c.expect(recon <= 1e-9, [&] { return fmt("reduced reconstruction", s, recon); });
    c.expect(sp.rank() == rank, [&] { return fmt("haar rank", s, sp.rank()); });
  }

  // |U_11|² of a 2x2 Haar unitary is uniform on [0, 1]
  const int draws = 10000;
  std::vector<double> u(draws);
  for (int k = 0; k < draws; ++k) u[static_cast<size_t>(k)] = std::norm(haar_unitary(2, derive_seed(seed, 7, static_cast<std::uint64_t>(k)))(0, 0));
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  for (int k = 0; k < draws; ++k) {
    const double x = u[static_cast<size_t>(k)];
    ks = std::max({ks, std::abs((k + 1.0) / draws - x), std::abs(x - static_cast<double>(k) / draws)});
  }
  c.expect(ks < 0.02, [&] { return fmt("haar |U11|^2 Kolmogorov-Smirnov statistic", seed, ks); });
}

void suite_estimator(Checker& c, std::uint64_t seed) {
  Engine gen(derive_seed(seed, 2));
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = uniform_int(g, 1, 8);
    const CovarianceModel m = random_model(n, uniform_int(g, 1, n), g);
    const ChannelTrace h = sample_rayleigh_channel(n, g());
    const NoiseModel noise = random_noise(g);
    const Eigen::VectorXd a = random_vector(n, g, 0.0, 3.0);
    Eigen::VectorXd b = a;
    b(uniform_int(g, 0, n - 1)) += uniform(g, 0.0, 2.0);
    const double fa = mmse_direct(m, h, a, noise), fb = mmse_direct(m, h, b, noise);
    c.expect(fb <= fa + 1e-12 * m.total_power(), [&] { return fmt("mmse increased with more energy", s, fb - fa); });
    c.expect(fa >= -1e-12 && fa <= m.total_power() * (1 + 1e-12), [&] { return fmt("mmse outside [0, P_x]", s, fa); });
    const double fw = mmse_woodbury(reduced_evd(m), h, a, noise);
    c.expect(rel(fw, fa) <= 1e-9, [&] { return fmt("woodbury vs direct", s, rel(fw, fa)); });
  }

  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = 4 * uniform_int(g, 1, 4);
    const int rank = uniform_int(g, 1, n);
    const CovarianceModel m = random_flat_cwss(n, rank, g);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = sample_rayleigh_channel(n, g());
    const NoiseModel noise = random_noise(g);
    const Eigen::VectorXd a = random_vector(n, g, 0.0, 3.0);
    const double err = mmse_direct(m, h, a, noise);
    const double up = upper_bound_uncorrelated(m.variances(), h, a, noise);
    const double lo = lower_bound_flat(sp, m.variances(), h, a, noise);
    const double tol = 1e-9 * m.total_power();
    c.expect(lo <= err + tol && err <= up + tol, [&] { return fmt("bound sandwich", s, std::max(lo - err, err - up)); });
    if (rank == n) {
      c.expect(std::abs(up - err) <= 1e-10 * n && std::abs(lo - err) <= 1e-10 * n,
               [&] { return fmt("bounds not tight at s = n", s, std::max(std::abs(up - err), std::abs(lo - err))); });
    }
  }

  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int rank = uniform_int(g, 1, 8);
    const int n = rank * uniform_int(g, 1, 4);
    const int delta = n / rank;
    const int t_d = uniform_int(g, 0, delta - 1);
    const double P = uniform(g, 1.0, 20.0);
    const CovarianceModel m = build_lowpass_cwss(n, rank, P);
    const ChannelTrace h = sample_rayleigh_channel(n, g());
    const NoiseModel noise = random_noise(g);
    const Eigen::VectorXd a_bar = random_vector(rank, g, 0.0, 3.0);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < rank; ++r) a(delta * r + t_d) = a_bar(r);
    const double closed = mmse_sampled_lowpass(n, rank, t_d, a_bar, h, noise, P);
    const double direct = mmse_direct(m, h, a, noise);
    c.expect(std::abs(closed - direct) <= 1e-9 * P, [&] { return fmt("sampled low-pass closed form", s, closed - direct); });
  }
}

void suite_gradient(Checker& c, std::uint64_t seed) {
  Engine gen(derive_seed(seed, 3));
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = uniform_int(g, 1, 10);
    const CovarianceModel m = random_model(n, uniform_int(g, 1, n), g);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = sample_rayleigh_channel(n, g());
    const NoiseModel noise = random_noise(g);
    const Eigen::VectorXd a = random_vector(n, g, 0.0, 2.0);
    const Eigen::VectorXd grad = mmse_gradient(sp, h, a, noise);
    Eigen::VectorXd fd(n);
    for (int t = 0; t < n; ++t) {
      const double step = 1e-6 * std::max(1.0, a(t));
      Eigen::VectorXd up = a, down = a;
      up(t) += step;
      down(t) -= step;
      fd(t) = (mmse_woodbury(sp, h, up, noise) - mmse_woodbury(sp, h, down, noise)) / (2 * step);
    }
    const double err = (grad - fd).cwiseAbs().maxCoeff() / std::max(fd.cwiseAbs().maxCoeff(), 1e-300);
    c.expect(err <= 1e-5, [&] { return fmt("gradient vs central differences", s, err); });
    c.expect((grad.array() <= 0.0).all(), [&] { return fmt("gradient component positive", s, grad.maxCoeff()); });
  }
}

void suite_majorization(Checker& c, std::uint64_t seed) {
  Engine gen(derive_seed(seed, 4));
  const Eigen::Vector3d x(1, 2, 3), y(3, 2, 1);
  c.expect(is_majorized(x, y) && is_majorized(y, x), [] { return std::string("permutations not mutually majorized"); });
  c.expect(is_majorized(Eigen::Vector3d::Constant(2.0), x), [] { return std::string("uniform vector not majorized"); });
  c.expect(is_majorized(x, Eigen::Vector3d(0, 6, 0)), [] { return std::string("spike does not majorize"); });
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = 16;
    const Eigen::VectorXd E = random_arrivals(n, g);
    const Eigen::VectorXd sigma = uniform(g, 0, 1) < 0.5 ? Eigen::VectorXd::Ones(n) : random_vector(n, g, 0.2, 2.0);
    const FeasibleRegion region(sigma, EnergyTrace(E));
    const PowerAllocation stair = most_majorized(region);
    c.expect(check_feasible(stair.a, region).feasible, [&] { return fmt("staircase infeasible", s, 0); });
    int violations = 0;
    for (int k = 0; k < 1000; ++k) {
      if (!is_majorized(stair.energy, random_feasible_profile(E, g))) ++violations;
    }
    c.expect(violations == 0, [&] { return fmt("staircase not majorized by random feasible profiles", s, violations); });
  }
}

void suite_solver(Checker& c, std::uint64_t seed) {
  Engine gen(derive_seed(seed, 5));
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = uniform_int(g, 2, 10);
    const CovarianceModel m = random_model(n, uniform_int(g, 1, n), g);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = sample_rayleigh_channel(n, g());
    const NoiseModel noise = random_noise(g);
    const FeasibleRegion region(m.variances(), EnergyTrace(random_arrivals(n, g)));
    const SolveOutcome opt = solve_optimal(sp, h, region, noise);
    const SolveOutcome again = solve_optimal(sp, h, region, noise);
    const SolveOutcome relax = solve_relaxed(sp, h, region, noise);
    c.expect(opt.diagnostics.converged && opt.diagnostics.kkt_residual <= 1e-8,
             [&] { return fmt("optimal solve not certified", s, opt.diagnostics.kkt_residual); });
    c.expect(check_feasible(opt.a, region).feasible, [&] { return fmt("optimal allocation infeasible", s, check_feasible(opt.a, region).worst_violation); });
    c.expect(relax.objective <= opt.objective + 1e-9, [&] { return fmt("relaxation above optimum", s, relax.objective - opt.objective); });
    c.expect(opt.a == again.a, [&] { return fmt("solver not deterministic", s, (opt.a - again.a).norm()); });
    // midpoint convexity along a feasible segment
    const Eigen::VectorXd J1 = random_feasible_profile(region.energy.packets(), g);
    const Eigen::VectorXd J2 = random_feasible_profile(region.energy.packets(), g);
    const Eigen::VectorXd a1 = J1.cwiseQuotient(m.variances()), a2 = J2.cwiseQuotient(m.variances());
    const double f1 = mmse_woodbury(sp, h, a1, noise), f2 = mmse_woodbury(sp, h, a2, noise);
    const double fm = mmse_woodbury(sp, h, 0.5 * (a1 + a2), noise);
    c.expect(fm <= 0.5 * (f1 + f2) + 1e-10, [&] { return fmt("midpoint convexity", s, fm - 0.5 * (f1 + f2)); });
    c.expect(opt.objective <= std::min(f1, f2) + 1e-8, [&] { return fmt("random feasible point beats optimum", s, opt.objective - std::min(f1, f2)); });
    // exact projection agrees with Dykstra
    const ReducedPolytope poly = ReducedPolytope::from_region(region);
    const LinearConstraints cons = LinearConstraints::from_polytope(poly);
    const Eigen::VectorXd y = random_vector(poly.m(), g, -2.0, 4.0);
    const QpResult exact = project_exact(poly, cons, y, poly.restrict(opt.a));
    const double scale = 1.0 + y.cwiseAbs().maxCoeff();
    const Eigen::VectorXd stat = exact.x - y + cons.A.transpose() * exact.lambda_ineq + cons.E.transpose() * exact.lambda_eq;
    const Eigen::VectorXd slack = cons.b - cons.A * exact.x;
    const double kkt = std::max({stat.cwiseAbs().maxCoeff(), -slack.minCoeff(),
                                 std::abs((cons.E * exact.x - cons.e)(0)),
                                 exact.lambda_ineq.cwiseProduct(slack).cwiseAbs().maxCoeff()});
    c.expect(exact.converged && exact.lambda_ineq.minCoeff() >= 0.0 && kkt <= 1e-9 * scale,
             [&] { return fmt("exact projection KKT residual", s, kkt); });
    // Dykstra stalls on polytopes without interior; compare only when it ends feasible
    const DykstraResult dyk = project_dykstra(poly, y, 1e-13, 2000000);
    const double dyk_viol = std::max({(cons.A * dyk.x - cons.b).maxCoeff(), std::abs((cons.E * dyk.x - cons.e)(0))});
    if (dyk.converged && dyk_viol <= 1e-9 * scale) {
      const double gap = (exact.x - dyk.x).cwiseAbs().maxCoeff();
      c.expect(gap <= 1e-6 * scale, [&] { return fmt("exact projection vs Dykstra", s, gap); });
    }
  }

  // diagonal models: threshold structure and slot orderings
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = uniform_int(g, 2, 10);
    const bool fading = trial % 2 == 0;
    const Eigen::VectorXd sigma = random_vector(n, g, 0.2, 2.0);
    const CovarianceModel m(Eigen::MatrixXcd(sigma.cast<cplx>().asDiagonal()));
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = fading ? sample_rayleigh_channel(n, g()) : ChannelTrace::unit(n);
    const NoiseModel noise = random_noise(g);
    const FeasibleRegion region(sigma, EnergyTrace(random_arrivals(n, g)));
    const SolveOutcome opt = solve_optimal(sp, h, region, noise);
    const SolverDiagnostics& d = opt.diagnostics;
    double worst = 0.0;
    for (int t = 0; t < n; ++t) {
      const double kappa = d.kappa(t), hs = h.gain_sq()(t), gamma = noise.gamma();
      if (!(kappa > 0.0)) continue;
      const double form = std::max(0.0, std::sqrt(sigma(t) / kappa) - 1.0 / std::sqrt(hs * gamma)) /
                          (std::sqrt(hs * gamma) * sigma(t));
      worst = std::max(worst, std::abs(form - opt.a(t)));
    }
    c.expect(worst <= 1e-6, [&] { return fmt("threshold form from recovered multipliers", s, worst); });
    c.expect(d.stationarity_residual <= 1e-6 * (1 + mmse_gradient(sp, h, opt.a, noise).cwiseAbs().maxCoeff()),
             [&] { return fmt("multiplier stationarity residual", s, d.stationarity_residual); });
    if (!fading) {
      const double E = region.energy.total();
      for (int lo = 0; lo < n; ++lo) {
        for (int hi = lo + 1; hi < n; ++hi) {
          if (sigma(hi) < sigma(lo)) continue;
          const double Jlo = opt.a(lo) * sigma(lo), Jhi = opt.a(hi) * sigma(hi);
          c.expect(Jhi >= Jlo - 1e-8 * E, [&] { return fmt("later stronger slot spends less", s, Jlo - Jhi); });
          if (opt.a(lo) > 1e-9) c.expect(opt.a(hi) > -1e-9, [&] { return fmt("later slot left silent", s, opt.a(hi)); });
        }
      }
    }
  }
}

void suite_policies(Checker& c, std::uint64_t seed) {
  Engine gen(derive_seed(seed, 6));
  const std::vector<std::string> heuristics{"greedy", "most-majorized", "param-greedy", "equidistant", "upper-1",
                                            "upper-2",  "upper-n",        "lower-2",      "lower-n"};
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int rank = uniform_int(g, 1, 4);
    const int n = 4 * uniform_int(g, 1, 3);
    const CovarianceModel m = build_lowpass_cwss(n, n % rank == 0 ? rank : 1, n);
    const SpectrumDecomposition sp = reduced_evd(m);
    const ChannelTrace h = trial % 2 ? sample_rayleigh_channel(n, g()) : ChannelTrace::unit(n);
    const NoiseModel noise = random_noise(g);
    const EnergyTrace energy(random_arrivals(n, g));
    const Problem problem{m, sp, h, energy, noise};
    const PolicyResult opt = run_policy(PolicySpec::parse("optimal"), problem);
    const PolicyResult relax = run_policy(PolicySpec::parse("relaxed"), problem);
    c.expect(relax.mse <= opt.mse + 1e-8, [&] { return fmt("relaxed above optimal", s, relax.mse - opt.mse); });
    const FeasibleRegion region(m.variances(), energy);
    for (const std::string& id : heuristics) {
      try {
        const PolicyResult r = run_policy(PolicySpec::parse(id), problem);
        c.expect(opt.mse <= r.mse + 1e-8, [&] { return fmt((id + " beats optimal").c_str(), s, opt.mse - r.mse); });
        c.expect(check_feasible(r.alloc.a, region).feasible, [&] { return fmt((id + " infeasible").c_str(), s, check_feasible(r.alloc.a, region).worst_violation); });
      } catch (const Error& e) {
        // equidistant legitimately refuses energy after its last sample
        c.expect(id == "equidistant" && e.kind() == ErrorKind::PlanInvalid, [&] { return std::string(e.what()) + " (seed " + std::to_string(s) + ")"; });
      }
    }
    const PolicyResult u1 = run_policy(PolicySpec::parse("upper-1"), problem);
    const PolicyResult gr = run_policy(PolicySpec::parse("greedy"), problem);
    c.expect((u1.alloc.a - gr.alloc.a).cwiseAbs().maxCoeff() <= 1e-12, [&] { return fmt("upper-1 differs from greedy", s, (u1.alloc.a - gr.alloc.a).cwiseAbs().maxCoeff()); });
  }

  auto balanced_is_optimal = [&](const char* label, const std::function<CovarianceModel(Engine&)>& make) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::uint64_t s = gen();
      Engine g(s);
      const CovarianceModel m = make(g);
      const int n = m.n();
      const SpectrumDecomposition sp = reduced_evd(m);
      const ChannelTrace h = ChannelTrace::unit(n);
      const NoiseModel noise = random_noise(g);
      const EnergyTrace energy(random_arrivals(n, g));
      const Problem problem{m, sp, h, energy, noise};
      const double mm = run_policy(PolicySpec::parse("most-majorized"), problem).mse;
      const double opt = run_policy(PolicySpec::parse("optimal"), problem).mse;
      c.expect(rel(mm, opt) <= 1e-7, [&] { return fmt(label, s, rel(mm, opt)); });
    }
  };
  balanced_is_optimal("static correlation: balanced vs optimal", [&](Engine& g) {
    const int n = uniform_int(g, 2, 16);
    return build_static_correlation(n, uniform(g, -1.0 / (n - 1), 1.0), n);
  });
  balanced_is_optimal("almost white: balanced vs optimal", [&](Engine& g) {
    const int n = uniform_int(g, 2, 16);
    Eigen::VectorXd z = Eigen::VectorXd::Ones(n);
    z(uniform_int(g, 0, n - 1)) = 1.0 - uniform(g, 0.01, 0.99);
    return circulant_from_spectrum(z);
  });

  // flat spectrum with the uniform allocation feasible: optimal value in closed form
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t s = gen();
    Engine g(s);
    const int n = uniform_int(g, 1, 12);
    const int rank = uniform_int(g, 1, n);
    const CovarianceModel m = random_flat_cwss(n, rank, g);
    const SpectrumDecomposition sp = reduced_evd(m);
    const NoiseModel noise = random_noise(g);
    Eigen::VectorXd E = Eigen::VectorXd::Zero(n);
    E(0) = uniform(g, 0.1, 5.0);
    const EnergyTrace energy(E);
    const Problem problem{m, sp, ChannelTrace::unit(n), energy, noise};
    const double opt = run_policy(PolicySpec::parse("optimal"), problem).mse;
    const double closed = m.total_power() / (1.0 + noise.gamma() * E(0) / rank);
    c.expect(rel(opt, closed) <= 1e-8, [&] { return fmt("uniform-feasible flat spectrum closed form", s, rel(opt, closed)); });
  }
}

void suite_harness(Checker& c, std::uint64_t seed) {
  ExperimentConfig config;
  config.n = 8;
  config.s = 3;
  config.total_power = 8;
  config.p_grid = {0.0, 0.3, 0.7};
  config.trials = 8;
  config.master_seed = seed;
  config.haar_seed = derive_seed(seed, 9);
  for (const char* id : {"optimal", "relaxed", "greedy", "upper-n", "upper-2"}) config.policies.push_back(PolicySpec::parse(id));
  const AggregateStats a = run_experiment(config);
  const AggregateStats b = run_experiment_serial(config);
  bool same = a.curves.size() == b.curves.size();
  for (size_t i = 0; same && i < a.curves.size(); ++i) {
    same = a.curves[i].mean_nmse == b.curves[i].mean_nmse && a.curves[i].std_nmse == b.curves[i].std_nmse;
  }
  c.expect(same, [&] { return fmt("parallel and serial sweeps differ", seed, 0); });
  c.expect(a.violations.empty(), [&] {
    return a.violations.empty() ? std::string() : fmt(("ordering violated by " + a.violations[0].policy).c_str(), a.violations[0].seed, a.violations[0].excess);
  });
  c.expect(a.failures == 0, [&] { return fmt("policy failures in sweep", seed, a.failures); });
  for (const CurvePoint& cp : a.curves) {
    if (cp.p == 0.0) c.expect(cp.mean_nmse == 1.0, [&] { return fmt(("p = 0 mean for " + cp.policy).c_str(), seed, cp.mean_nmse); });
  }

  double packets = 0.0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) packets += sample_bernoulli_arrivals(0.3, 16, 1.0, derive_seed(seed, 11, static_cast<std::uint64_t>(k))).total();
  const double rate = packets / (16.0 * draws);
  c.expect(std::abs(rate - 0.3) <= 0.01, [&] { return fmt("bernoulli arrival rate", seed, rate); });

  double gain = 0.0, re2 = 0.0, im2 = 0.0;
  const ChannelTrace h = sample_rayleigh_channel(100000, derive_seed(seed, 12));
  for (int t = 0; t < h.n(); ++t) {
    gain += h.gain_sq()(t);
    re2 += h.h()(t).real() * h.h()(t).real();
    im2 += h.h()(t).imag() * h.h()(t).imag();
  }
  gain /= h.n();
  re2 /= h.n();
  im2 /= h.n();
  c.expect(std::abs(gain - 1.0) <= 0.01, [&] { return fmt("rayleigh mean gain", seed, gain); });
  c.expect(std::abs(re2 - 0.5) <= 0.01 && std::abs(im2 - 0.5) <= 0.01, [&] { return fmt("rayleigh component variance", seed, re2); });
}

}  // namespace

CovarianceModel random_model(int n, int s, Engine& gen) {
  Eigen::VectorXd lambda = random_vector(s, gen, 0.1, 2.0);
  lambda *= n / lambda.sum();
  return random_haar_covariance(n, lambda, gen());
}

Eigen::VectorXd random_arrivals(int n, Engine& gen) {
  Eigen::VectorXd E(n);
  for (int t = 0; t < n; ++t) E(t) = uniform(gen, 0, 1) < 0.5 ? uniform(gen, 0.0, 2.0) : 0.0;
  if (!(E.sum() > 0.0)) E(uniform_int(gen, 0, n - 1)) = uniform(gen, 0.1, 2.0);
  return E;
}

Eigen::VectorXd random_feasible_profile(const Eigen::VectorXd& packets, Engine& gen) {
  const Eigen::Index n = packets.size();
  Eigen::VectorXd J(n);
  double battery = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    battery += packets(t);
    const double pick = uniform(gen, 0.0, 1.0);
    const double share = pick < 0.2 ? 0.0 : pick > 0.8 ? 1.0 : uniform(gen, 0.0, 1.0);
    J(t) = t + 1 == n ? battery : share * battery;
    battery -= J(t);
  }
  return J;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"signal-model", "estimator", "gradient", "majorization",
                                              "solver",       "policies",  "harness"};
  return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
  SuiteResult result;
  result.name = name;
  Checker checker(result);
  const auto start = std::chrono::steady_clock::now();
  try {
    if (name == "signal-model") suite_signal_model(checker, seed);
    else if (name == "estimator") suite_estimator(checker, seed);
    else if (name == "gradient") suite_gradient(checker, seed);
    else if (name == "majorization") suite_majorization(checker, seed);
    else if (name == "solver") suite_solver(checker, seed);
    else if (name == "policies") suite_policies(checker, seed);
    else if (name == "harness") suite_harness(checker, seed);
    else fail(ErrorKind::InvalidConfig, "unknown suite '" + name + "'");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidConfig && result.checks == 0) throw;
    result.failures.push_back(std::string("unexpected error: ") + e.what());
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<SuiteResult> run_validation(const std::optional<std::string>& only, std::uint64_t seed) {
  std::vector<SuiteResult> out;
  if (only) {
    out.push_back(run_suite(*only, seed));
    return out;
  }
  for (const std::string& name : suite_names()) out.push_back(run_suite(name, seed));
  return out;
}

}  // namespace ehalloc
