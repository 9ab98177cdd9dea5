#include "ehalloc/energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ehalloc/errors.hpp"

namespace ehalloc {

EnergyTrace::EnergyTrace(Eigen::VectorXd packets) : packets_(std::move(packets)) {
  if (!packets_.allFinite() || (packets_.array() < 0.0).any()) {
    fail(ErrorKind::InvalidConfig, "energy packets must be finite and nonnegative");
  }
  cumulative_.resize(packets_.size());
  double run = 0.0;
  for (Eigen::Index t = 0; t < packets_.size(); ++t) {
    run += packets_(t);
    cumulative_(t) = run;
  }
}

FeasibleRegion::FeasibleRegion(Eigen::VectorXd sigma_sq_in, EnergyTrace energy_in, RegionMode mode_in)
    : sigma_sq(std::move(sigma_sq_in)), energy(std::move(energy_in)), mode(mode_in) {
  if (sigma_sq.size() != energy.n()) {
    fail(ErrorKind::DimensionMismatch, "variance and energy traces differ in length");
  }
  if ((sigma_sq.array() < 0.0).any()) fail(ErrorKind::InvalidConfig, "variances must be nonnegative");
}

FeasibilityVerdict check_feasible(const Eigen::VectorXd& a, const FeasibleRegion& region) {
  const int n = region.n();
  if (a.size() != n) fail(ErrorKind::DimensionMismatch, "allocation length differs from region");
  const double e_tot = region.energy.total();
  const double tol = 1e-9 * e_tot;
  FeasibilityVerdict v;
  v.feasible = true;
  auto record = [&](double excess, int index, double allowed) {
    if (excess > v.worst_violation) {
      v.worst_violation = excess;
      v.worst_index = index;
    }
    if (excess > allowed) v.feasible = false;
  };
  double used = 0.0;
  for (int t = 0; t < n; ++t) {
    record(-a(t), t, 1e-12);
    used += a(t) * region.sigma_sq(t);
    if (region.mode == RegionMode::Causal && t < n - 1) {
      record(used - region.energy.cumulative()(t), t, tol);
    }
  }
  record(std::abs(used - e_tot), n - 1, tol);
  return v;
}

ReducedPolytope ReducedPolytope::from_region(const FeasibleRegion& region) {
  ReducedPolytope p;
  p.causal = region.mode == RegionMode::Causal;
  p.total = region.energy.total();
  const int n = region.n();
  for (int t = 0; t < n; ++t) {
    if (region.sigma_sq(t) > 0.0) p.slots.push_back(t);
  }
  const int m = p.m();
  if (m == 0) {
    if (p.total > 0.0) fail(ErrorKind::InfeasibleRegion, "no slot with positive variance can spend energy");
    p.w.resize(0);
    p.caps.resize(0);
    return p;
  }
  p.w.resize(m);
  for (int j = 0; j < m; ++j) p.w(j) = region.sigma_sq(p.slots[j]);
  if (p.causal) {
    const Eigen::VectorXd& cum = region.energy.cumulative();
    p.caps.resize(m - 1);
    for (int j = 0; j + 1 < m; ++j) p.caps(j) = cum(p.slots[j]);
    if (cum(p.slots[m - 1]) < p.total * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "energy arriving after slot " << p.slots[m - 1] + 1
         << " cannot be spent by any positive-variance slot";
      fail(ErrorKind::InfeasibleRegion, os.str());
    }
  } else {
    p.caps.resize(0);
  }
  return p;
}

Eigen::VectorXd ReducedPolytope::embed(const Eigen::VectorXd& x, int n) const {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < m(); ++j) a(slots[j]) = x(j);
  return a;
}

Eigen::VectorXd ReducedPolytope::restrict(const Eigen::VectorXd& a) const {
  Eigen::VectorXd x(m());
  for (int j = 0; j < m(); ++j) x(j) = a(slots[j]);
  return x;
}

}  // namespace ehalloc
