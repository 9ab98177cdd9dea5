#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ehalloc/energy.hpp"

namespace ehalloc {

/// Dense linear constraints  A x <= b,  E x = e.
struct LinearConstraints {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd E;
  Eigen::VectorXd e;

  /// Rows 0..m-2 are the prefix caps (causal mode), followed by -x_j <= 0.
  static LinearConstraints from_polytope(const ReducedPolytope& poly);
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda_ineq;  // zero outside the final working set
  Eigen::VectorXd lambda_eq;
  std::vector<int> working_set;
  int iterations = 0;
  bool converged = false;
};

/// Primal active-set method for  min ½ x'Hx + g'x  over `cons`, with H
/// positive definite. `x0` must be feasible; `warm` lists inequality rows to
/// try first (kept only if active at x0 and linearly independent).
QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const LinearConstraints& cons,
                  const Eigen::VectorXd& x0, const std::vector<int>& warm = {});

/// Exact Euclidean projection of y onto the polytope, starting from a
/// feasible point x0.
QpResult project_exact(const ReducedPolytope& poly, const LinearConstraints& cons,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& x0);

struct DykstraResult {
  Eigen::VectorXd x;
  int sweeps = 0;
  bool converged = false;
};

/// Dykstra's alternating projections over the prefix half-spaces, the total
/// hyperplane and the nonnegative orthant.
DykstraResult project_dykstra(const ReducedPolytope& poly, const Eigen::VectorXd& y,
                              double tol = 1e-12, int max_sweeps = 10000);

}  // namespace ehalloc
