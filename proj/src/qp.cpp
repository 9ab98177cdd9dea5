#include "ehalloc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ehalloc {

namespace {

// Incremental orthonormal basis of the working-set row space; used to keep
// the KKT system nonsingular when seeding from a warm start.
class RowBasis {
 public:
  explicit RowBasis(Eigen::Index dim) : dim_(dim) {}

  bool try_add(const Eigen::VectorXd& row) {
    Eigen::VectorXd r = row;
    for (const auto& q : basis_) r -= q.dot(r) * q;
    for (const auto& q : basis_) r -= q.dot(r) * q;
    const double norm = r.norm();
    if (norm <= 1e-10 * row.norm() || static_cast<Eigen::Index>(basis_.size()) >= dim_) return false;
    basis_.push_back(r / norm);
    return true;
  }

 private:
  Eigen::Index dim_;
  std::vector<Eigen::VectorXd> basis_;
};

}  // namespace

LinearConstraints LinearConstraints::from_polytope(const ReducedPolytope& poly) {
  const int m = poly.m();
  const int prefix = poly.causal ? std::max(m - 1, 0) : 0;
  LinearConstraints c;
  c.A = Eigen::MatrixXd::Zero(prefix + m, m);
  c.b = Eigen::VectorXd::Zero(prefix + m);
  for (int j = 0; j < prefix; ++j) {
    c.A.row(j).head(j + 1) = poly.w.head(j + 1).transpose();
    c.b(j) = poly.caps(j);
  }
  for (int j = 0; j < m; ++j) c.A(prefix + j, j) = -1.0;
  c.E = poly.w.transpose();
  c.e = Eigen::VectorXd::Constant(1, poly.total);
  return c;
}

QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const LinearConstraints& cons,
                  const Eigen::VectorXd& x0, const std::vector<int>& warm) {
  const Eigen::Index n = x0.size();
  const Eigen::Index mi = cons.A.rows();
  const Eigen::Index me = cons.E.rows();

  QpResult out;
  out.x = x0;
  out.lambda_ineq = Eigen::VectorXd::Zero(mi);
  out.lambda_eq = Eigen::VectorXd::Zero(me);

  std::vector<int> W;
  std::vector<char> in_w(static_cast<size_t>(mi), 0);
  {
    RowBasis basis(n);
    for (Eigen::Index r = 0; r < me; ++r) basis.try_add(cons.E.row(r).transpose());
    std::vector<int> seed = warm;
    std::sort(seed.begin(), seed.end());
    seed.erase(std::unique(seed.begin(), seed.end()), seed.end());
    for (int i : seed) {
      if (i < 0 || i >= mi) continue;
      const double slack = cons.b(i) - cons.A.row(i).dot(out.x);
      if (std::abs(slack) > 1e-12 * (1.0 + std::abs(cons.b(i)))) continue;
      if (basis.try_add(cons.A.row(i).transpose())) {
        W.push_back(i);
        in_w[static_cast<size_t>(i)] = 1;
      }
    }
  }

  const double g_scale = 1.0 + g.cwiseAbs().maxCoeff();
  const int max_iter = static_cast<int>(10 * (n + mi + me) + 100);
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    const Eigen::Index k = me + static_cast<Eigen::Index>(W.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = H;
    rhs.head(n) = -g;
    for (Eigen::Index r = 0; r < me; ++r) {
      K.block(n + r, 0, 1, n) = cons.E.row(r);
      K.block(0, n + r, n, 1) = cons.E.row(r).transpose();
      rhs(n + r) = cons.e(r);
    }
    for (size_t q = 0; q < W.size(); ++q) {
      const Eigen::Index row = n + me + static_cast<Eigen::Index>(q);
      K.block(row, 0, 1, n) = cons.A.row(W[q]);
      K.block(0, row, n, 1) = cons.A.row(W[q]).transpose();
      rhs(row) = cons.b(W[q]);
    }
    const Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
    Eigen::VectorXd x_new = sol.head(n);
    Eigen::VectorXd p = x_new - out.x;
    double p_norm = p.norm();
    if (p_norm <= 1e-14 * (1.0 + out.x.norm())) {
      // rounding noise only; a ratio test on it could add a dependent row
      x_new = out.x;
      p.setZero();
      p_norm = 0.0;
    }

    if (!sol.allFinite()) return out;

    double alpha = 1.0;
    int blocking = -1;
    std::vector<char> dependent(static_cast<size_t>(mi), 0);
    while (p_norm > 0.0) {
      alpha = 1.0;
      blocking = -1;
      for (Eigen::Index i = 0; i < mi; ++i) {
        if (in_w[static_cast<size_t>(i)] || dependent[static_cast<size_t>(i)]) continue;
        const double ap = cons.A.row(i).dot(p);
        if (ap <= 1e-12 * cons.A.row(i).norm() * p_norm) continue;
        const double ratio = std::max(0.0, (cons.b(i) - cons.A.row(i).dot(out.x)) / ap);
        if (ratio < alpha) {
          alpha = ratio;
          blocking = static_cast<int>(i);
        }
      }
      if (blocking < 0) break;
      // a row in the span of the working set is blocked only by rounding noise
      RowBasis basis(n);
      for (Eigen::Index r = 0; r < me; ++r) basis.try_add(cons.E.row(r).transpose());
      for (int w : W) basis.try_add(cons.A.row(w).transpose());
      if (basis.try_add(cons.A.row(blocking).transpose())) break;
      dependent[static_cast<size_t>(blocking)] = 1;
    }

    if (blocking < 0) {
      out.x = x_new;
      // At the minimizer of the equality-constrained subproblem: inspect multipliers.
      int drop = -1;
      double most_negative = -1e-12 * g_scale;
      for (size_t q = 0; q < W.size(); ++q) {
        const double lam = sol(n + me + static_cast<Eigen::Index>(q));
        if (lam < most_negative) {
          most_negative = lam;
          drop = static_cast<int>(q);
        }
      }
      if (drop < 0) {
        out.lambda_ineq.setZero();
        for (size_t q = 0; q < W.size(); ++q) {
          out.lambda_ineq(W[q]) = std::max(0.0, sol(n + me + static_cast<Eigen::Index>(q)));
        }
        out.lambda_eq = sol.segment(n, me);
        out.working_set = W;
        out.converged = true;
        return out;
      }
      in_w[static_cast<size_t>(W[static_cast<size_t>(drop)])] = 0;
      W.erase(W.begin() + drop);
    } else {
      out.x += alpha * p;
      W.push_back(blocking);
      in_w[static_cast<size_t>(blocking)] = 1;
    }
  }
  out.working_set = W;
  return out;
}

QpResult project_exact(const ReducedPolytope& poly, const LinearConstraints& cons,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& x0) {
  const Eigen::Index m = poly.m();
  std::vector<int> warm(static_cast<size_t>(cons.A.rows()));
  for (size_t i = 0; i < warm.size(); ++i) warm[i] = static_cast<int>(i);
  return solve_qp(Eigen::MatrixXd::Identity(m, m), -y, cons, x0, warm);
}

DykstraResult project_dykstra(const ReducedPolytope& poly, const Eigen::VectorXd& y, double tol,
                              int max_sweeps) {
  const int m = poly.m();
  const int prefix = poly.causal ? std::max(m - 1, 0) : 0;
  const int sets = prefix + 2;  // prefix half-spaces, hyperplane, orthant
  std::vector<Eigen::VectorXd> corr(static_cast<size_t>(sets), Eigen::VectorXd::Zero(m));

  // running prefix norms ‖w_{0..j}‖²
  Eigen::VectorXd prefix_sq(m);
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    acc += poly.w(j) * poly.w(j);
    prefix_sq(j) = acc;
  }

  DykstraResult out;
  out.x = y;
  Eigen::VectorXd z(m);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    const Eigen::VectorXd before = out.x;
    for (int set = 0; set < sets; ++set) {
      auto& c = corr[static_cast<size_t>(set)];
      z = out.x + c;
      if (set < prefix) {
        const double excess = poly.w.head(set + 1).dot(z.head(set + 1)) - poly.caps(set);
        out.x = z;
        if (excess > 0.0) out.x.head(set + 1) -= (excess / prefix_sq(set)) * poly.w.head(set + 1);
      } else if (set == prefix) {
        const double excess = poly.w.dot(z) - poly.total;
        out.x = z - (excess / prefix_sq(m - 1)) * poly.w;
      } else {
        out.x = z.cwiseMax(0.0);
      }
      c = z - out.x;
    }
    out.sweeps = sweep;
    if ((out.x - before).cwiseAbs().maxCoeff() <= tol * (1.0 + out.x.cwiseAbs().maxCoeff())) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace ehalloc
