#include "ehalloc/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "ehalloc/errors.hpp"
#include "ehalloc/qp.hpp"

namespace ehalloc {

namespace {

Eigen::VectorXd greedy_start(const FeasibleRegion& region, const ReducedPolytope& poly) {
  const Eigen::VectorXd& cum = region.energy.cumulative();
  Eigen::VectorXd x(poly.m());
  double spent = 0.0;
  for (int j = 0; j < poly.m(); ++j) {
    const double avail = (j + 1 == poly.m()) ? poly.total : cum(poly.slots[j]);
    x(j) = std::max(avail - spent, 0.0) / poly.w(j);
    spent = std::max(spent, avail);
  }
  return x;
}

Eigen::MatrixXd restrict_square(const Eigen::MatrixXd& M, const std::vector<int>& idx) {
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) out(i, j) = M(idx[i], idx[j]);
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TraceInverseObjective::TraceInverseObjective(const SpectrumDecomposition& spectrum,
                                             const ChannelTrace& channel, const NoiseModel& noise)
    : spectrum_(spectrum), channel_(channel), noise_(noise) {
  if (channel.n() != spectrum.n()) fail(ErrorKind::DimensionMismatch, "channel length differs from model");
}

double TraceInverseObjective::value(const Eigen::VectorXd& a) const {
  return mmse_woodbury(spectrum_, channel_, a, noise_);
}

void TraceInverseObjective::derivatives(const Eigen::VectorXd& a, Eigen::VectorXd& grad,
                                        Eigen::MatrixXd& hess) const {
  TraceInverseTerms terms = mmse_terms(spectrum_, channel_, a, noise_, true);
  grad = std::move(terms.gradient);
  hess = std::move(terms.hessian);
}

SeparableObjective::SeparableObjective(Eigen::VectorXd weight, Eigen::VectorXd gain, Eigen::VectorXd sigma_sq)
    : weight_(std::move(weight)), gain_(std::move(gain)), sigma_sq_(std::move(sigma_sq)) {
  if (weight_.size() != gain_.size() || weight_.size() != sigma_sq_.size()) {
    fail(ErrorKind::DimensionMismatch, "separable objective terms differ in length");
  }
}

double SeparableObjective::value(const Eigen::VectorXd& a) const {
  double f = 0.0;
  for (Eigen::Index t = 0; t < a.size(); ++t) f += weight_(t) / (1.0 + gain_(t) * sigma_sq_(t) * a(t));
  return f;
}

void SeparableObjective::derivatives(const Eigen::VectorXd& a, Eigen::VectorXd& grad,
                                     Eigen::MatrixXd& hess) const {
  const Eigen::Index n = a.size();
  grad.resize(n);
  hess = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double k = gain_(t) * sigma_sq_(t);
    const double den = 1.0 + k * a(t);
    grad(t) = -weight_(t) * k / (den * den);
    hess(t, t) = 2.0 * weight_(t) * k * k / (den * den * den);
  }
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& C, const Eigen::VectorXd& d, int max_iter) {
  const Eigen::Index k = C.cols();
  if (max_iter <= 0) max_iter = static_cast<int>(3 * k + 10);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  std::vector<char> passive(static_cast<size_t>(k), 0);
  const double tol = 1e-12 * (1.0 + C.cwiseAbs().maxCoeff()) * (1.0 + d.cwiseAbs().maxCoeff());

  auto solve_passive = [&](Eigen::VectorXd& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (passive[static_cast<size_t>(j)]) idx.push_back(j);
    }
    Eigen::MatrixXd Cp(C.rows(), static_cast<Eigen::Index>(idx.size()));
    for (size_t q = 0; q < idx.size(); ++q) Cp.col(static_cast<Eigen::Index>(q)) = C.col(idx[q]);
    const Eigen::VectorXd sp = Cp.colPivHouseholderQr().solve(d);
    s = Eigen::VectorXd::Zero(k);
    for (size_t q = 0; q < idx.size(); ++q) s(idx[q]) = sp(static_cast<Eigen::Index>(q));
  };

  for (int outer = 0; outer < max_iter; ++outer) {
    const Eigen::VectorXd w = C.transpose() * (d - C * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!passive[static_cast<size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<size_t>(best)] = 1;
    Eigen::VectorXd s;
    for (int inner = 0; inner < max_iter; ++inner) {
      solve_passive(s);
      bool positive = true;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<size_t>(j)] && s(j) <= 0.0) positive = false;
      }
      if (positive) break;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<size_t>(j)] && s(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - s(j)));
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<size_t>(j)] && x(j) <= 1e-15) {
          passive[static_cast<size_t>(j)] = 0;
          x(j) = 0.0;
        }
      }
    }
    x = s.cwiseMax(0.0);
  }
  return x;
}

void recover_multipliers(const FeasibleRegion& region, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& grad, SolverDiagnostics& diag) {
  const int n = region.n();
  const bool causal = region.mode == RegionMode::Causal;
  const double e_tot = region.energy.total();
  const Eigen::VectorXd& w = region.sigma_sq;
  const Eigen::VectorXd& cum = region.energy.cumulative();

  Eigen::VectorXd slack(std::max(n - 1, 0));  // W_T = Σ_{l<=T} σ² a - Σ E
  double used = 0.0;
  for (int t = 0; t + 1 < n; ++t) {
    used += w(t) * a(t);
    slack(t) = used - cum(t);
  }

  std::vector<int> free_slots;
  for (int t = 0; t < n; ++t) {
    if (w(t) > 0.0) free_slots.push_back(t);
  }
  std::vector<int> tight, zero_slots;
  if (causal) {
    for (int T = 0; T + 1 < n; ++T) {
      if (slack(T) >= -1e-9 * e_tot) tight.push_back(T);
    }
  }
  const double a_tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff());
  for (int t : free_slots) {
    if (a(t) <= a_tol) zero_slots.push_back(t);
  }

  // unknowns: [η_tight, μ_zero, ν+, ν-]
  const auto rows = static_cast<Eigen::Index>(free_slots.size());
  const auto k_eta = static_cast<Eigen::Index>(tight.size());
  const auto k_mu = static_cast<Eigen::Index>(zero_slots.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(rows, k_eta + k_mu + 2);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int t = free_slots[static_cast<size_t>(r)];
    rhs(r) = -grad(t);
    for (Eigen::Index q = 0; q < k_eta; ++q) {
      if (tight[static_cast<size_t>(q)] >= t) C(r, q) = w(t);
    }
    for (Eigen::Index q = 0; q < k_mu; ++q) {
      if (zero_slots[static_cast<size_t>(q)] == t) C(r, k_eta + q) = -1.0;
    }
    C(r, k_eta + k_mu) = w(t);
    C(r, k_eta + k_mu + 1) = -w(t);
  }
  const Eigen::VectorXd z = rows > 0 ? nnls(C, rhs) : Eigen::VectorXd::Zero(C.cols());

  diag.eta = Eigen::VectorXd::Zero(std::max(n - 1, 0));
  diag.mu = Eigen::VectorXd::Zero(n);
  for (Eigen::Index q = 0; q < k_eta; ++q) diag.eta(tight[static_cast<size_t>(q)]) = z(q);
  for (Eigen::Index q = 0; q < k_mu; ++q) diag.mu(zero_slots[static_cast<size_t>(q)]) = z(k_eta + q);
  diag.nu = z(k_eta + k_mu) - z(k_eta + k_mu + 1);
  diag.kappa.resize(n);
  double tail = diag.nu;
  for (int t = n - 1; t >= 0; --t) {
    if (t < n - 1) tail += diag.eta(t);
    diag.kappa(t) = tail;
  }

  diag.stationarity_residual = 0.0;
  for (int t : free_slots) {
    const double r = grad(t) + w(t) * diag.kappa(t) - diag.mu(t);
    diag.stationarity_residual = std::max(diag.stationarity_residual, std::abs(r));
  }
  diag.complementarity = 0.0;
  for (int T = 0; T + 1 < n; ++T) {
    diag.complementarity = std::max(diag.complementarity, std::abs(diag.eta(T) * slack(T)));
  }
  for (int t = 0; t < n; ++t) {
    diag.complementarity = std::max(diag.complementarity, std::abs(diag.mu(t) * a(t)));
  }
}

double projected_gradient_residual(const FeasibleRegion& region, const Eigen::VectorXd& a,
                                   const Eigen::VectorXd& grad) {
  const ReducedPolytope poly = ReducedPolytope::from_region(region);
  if (poly.m() == 0) return 0.0;
  const LinearConstraints cons = LinearConstraints::from_polytope(poly);
  const Eigen::VectorXd x = poly.restrict(a);
  const Eigen::VectorXd g = poly.restrict(grad);
  const QpResult proj = project_exact(poly, cons, x - g, x);
  if (!proj.converged) return std::numeric_limits<double>::infinity();
  return (proj.x - x).cwiseAbs().maxCoeff() / (1.0 + g.cwiseAbs().maxCoeff());
}

SolveOutcome minimize(const Objective& objective, const FeasibleRegion& region, const SolverOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const int n = objective.n();
  if (region.n() != n) fail(ErrorKind::DimensionMismatch, "region length differs from objective");
  if (!(region.energy.total() > 0.0)) {
    fail(ErrorKind::InfeasibleRegion, "no harvested energy to allocate (E_tot = 0)");
  }
  const ReducedPolytope poly = ReducedPolytope::from_region(region);
  const LinearConstraints cons = LinearConstraints::from_polytope(poly);
  const int m = poly.m();
  const int prefix = poly.causal ? m - 1 : 0;

  Eigen::VectorXd x = greedy_start(region, poly);
  Eigen::VectorXd a = poly.embed(x, n);
  double f = objective.value(a);
  std::vector<int> working;
  Eigen::VectorXd grad_full;
  Eigen::MatrixXd hess_full;

  SolveOutcome out;
  SolverDiagnostics& diag = out.diagnostics;
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations && !converged; ++iter) {
    objective.derivatives(a, grad_full, hess_full);
    const Eigen::VectorXd g = poly.restrict(grad_full);
    Eigen::MatrixXd H = restrict_square(hess_full, poly.slots);
    const double hmax = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    H.diagonal() += 1e-10 * H.diagonal().cwiseAbs() + Eigen::VectorXd::Constant(m, 1e-14 * hmax);

    QpResult step = solve_qp(H, g - H * x, cons, x, working);
    working = step.working_set;
    for (int i : working) {
      if (i >= prefix) step.x(i - prefix) = 0.0;  // bound rows hold exactly
    }
    const Eigen::VectorXd d = step.x - x;
    const double slope = g.dot(d);

    const bool small_step = -slope <= 1e-15 * std::max(std::abs(f), 1e-300) ||
                            d.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + x.cwiseAbs().maxCoeff());
    if (small_step || (iter > 0 && iter % 50 == 0)) {
      diag.kkt_residual = projected_gradient_residual(region, a, grad_full);
      if (diag.kkt_residual <= options.kkt_tol) {
        converged = true;
        break;
      }
    }
    if (slope >= 0.0) break;  // no descent available; certificate above failed

    double alpha = 1.0;
    Eigen::VectorXd x_try;
    double f_try = f;
    bool accepted = false;
    while (alpha > 1e-20) {
      x_try = (x + alpha * d).cwiseMax(0.0);
      f_try = objective.value(poly.embed(x_try, n));
      if (f_try <= f + options.armijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= options.shrink;
    }
    if (!accepted) {
      diag.kkt_residual = projected_gradient_residual(region, a, grad_full);
      converged = diag.kkt_residual <= options.kkt_tol;
      break;
    }
    x = x_try;
    a = poly.embed(x, n);
    f = f_try;
  }

  objective.derivatives(a, grad_full, hess_full);
  if (!converged) diag.kkt_residual = projected_gradient_residual(region, a, grad_full);
  diag.converged = converged || diag.kkt_residual <= options.kkt_tol;
  diag.iterations = iter;
  recover_multipliers(region, a, grad_full, diag);
  out.a = a;
  out.objective = objective.value(a);
  diag.wall_time = seconds_since(start);
  return out;
}

SolveOutcome solve_optimal(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                           const FeasibleRegion& region, const NoiseModel& noise, const SolverOptions& options) {
  if (region.mode != RegionMode::Causal) fail(ErrorKind::InvalidConfig, "solve_optimal needs a causal region");
  TraceInverseObjective objective(spectrum, channel, noise);
  return minimize(objective, region, options);
}

SolveOutcome solve_relaxed(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                           const FeasibleRegion& region, const NoiseModel& noise, const SolverOptions& options) {
  TraceInverseObjective objective(spectrum, channel, noise);
  return minimize(objective, region.relaxed(), options);
}

}  // namespace ehalloc
