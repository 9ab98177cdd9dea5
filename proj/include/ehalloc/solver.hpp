#pragma once

#include <Eigen/Dense>

#include "ehalloc/energy.hpp"
#include "ehalloc/estimator.hpp"
#include "ehalloc/signal_model.hpp"

namespace ehalloc {

struct SolverOptions {
  double kkt_tol = 1e-8;
  double obj_tol = 1e-7;
  int max_iterations = 50000;
  double armijo = 1e-4;
  double shrink = 0.5;
};

/// Convergence certificate and recovered multipliers of the allocation problem
/// (multipliers in a-space: η on the prefix caps, ν on the total, μ on a >= 0).
struct SolverDiagnostics {
  double kkt_residual = 0.0;        // ‖P(a - ∇f) - a‖∞ / (1 + ‖∇f‖∞)
  double stationarity_residual = 0.0;  // ‖∇f + σ²∘κ - μ‖∞ of the recovered multipliers
  double complementarity = 0.0;     // max(|η_T W_T|, |μ_t a_t|)
  int iterations = 0;
  double wall_time = 0.0;           // seconds
  bool converged = false;
  Eigen::VectorXd eta;    // n-1 entries, zero in total-only mode
  double nu = 0.0;
  Eigen::VectorXd mu;     // n entries
  Eigen::VectorXd kappa;  // κ_t = Σ_{T>=t} η_T + ν
};

struct SolveOutcome {
  Eigen::VectorXd a;
  double objective = 0.0;
  SolverDiagnostics diagnostics;
};

/// Smooth convex objective over the full allocation vector.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual int n() const = 0;
  virtual double value(const Eigen::VectorXd& a) const = 0;
  /// Fills the gradient and Hessian at a.
  virtual void derivatives(const Eigen::VectorXd& a, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const = 0;
};

/// The MMSE in Woodbury form.
class TraceInverseObjective final : public Objective {
 public:
  TraceInverseObjective(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                        const NoiseModel& noise);

  int n() const override { return spectrum_.n(); }
  double value(const Eigen::VectorXd& a) const override;
  void derivatives(const Eigen::VectorXd& a, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const override;

 private:
  const SpectrumDecomposition& spectrum_;
  const ChannelTrace& channel_;
  const NoiseModel& noise_;
};

/// Σ_t weight_t / (1 + gain_t σ²_t a_t); the uncorrelated error and the
/// flat-spectrum bound are both of this form.
class SeparableObjective final : public Objective {
 public:
  SeparableObjective(Eigen::VectorXd weight, Eigen::VectorXd gain, Eigen::VectorXd sigma_sq);

  int n() const override { return static_cast<int>(weight_.size()); }
  double value(const Eigen::VectorXd& a) const override;
  void derivatives(const Eigen::VectorXd& a, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const override;

 private:
  Eigen::VectorXd weight_, gain_, sigma_sq_;
};

/// Minimizes `objective` over `region` by Newton-metric projected steps with
/// Armijo backtracking; each step direction solves the linearly constrained
/// quadratic model exactly. Starts from the greedy allocation. Throws
/// InfeasibleRegion when E_tot = 0 or the total cannot be spent.
SolveOutcome minimize(const Objective& objective, const FeasibleRegion& region,
                      const SolverOptions& options = {});

SolveOutcome solve_optimal(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                           const FeasibleRegion& region, const NoiseModel& noise,
                           const SolverOptions& options = {});

/// Same problem with only the total-energy equality (lower bound on the optimum).
SolveOutcome solve_relaxed(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                           const FeasibleRegion& region, const NoiseModel& noise,
                           const SolverOptions& options = {});

/// ‖P(a - grad) - a‖∞ / (1 + ‖grad‖∞) with the exact Euclidean projection.
double projected_gradient_residual(const FeasibleRegion& region, const Eigen::VectorXd& a,
                                   const Eigen::VectorXd& grad);

/// Lawson–Hanson nonnegative least squares, min ‖Cx - d‖ s.t. x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& C, const Eigen::VectorXd& d, int max_iter = 0);

/// Multipliers satisfying the stationarity system at a (best effort via NNLS).
void recover_multipliers(const FeasibleRegion& region, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& grad, SolverDiagnostics& diag);

}  // namespace ehalloc
