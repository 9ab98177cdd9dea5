#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ehalloc {

/// Harvested energy packets E_t and their prefix sums.
class EnergyTrace {
 public:
  explicit EnergyTrace(Eigen::VectorXd packets);

  int n() const { return static_cast<int>(packets_.size()); }
  const Eigen::VectorXd& packets() const { return packets_; }
  /// cumulative()(t) = Σ_{l<=t} E_l (0-based).
  const Eigen::VectorXd& cumulative() const { return cumulative_; }
  double total() const { return n() == 0 ? 0.0 : cumulative_(n() - 1); }

 private:
  Eigen::VectorXd packets_;
  Eigen::VectorXd cumulative_;
};

enum class RegionMode { Causal, TotalOnly };

/// Constraint set of the allocation problem: energy causality on prefixes
/// (causal mode only), the total-energy equality and a >= 0.
struct FeasibleRegion {
  Eigen::VectorXd sigma_sq;
  EnergyTrace energy;
  RegionMode mode = RegionMode::Causal;

  FeasibleRegion(Eigen::VectorXd sigma_sq_in, EnergyTrace energy_in, RegionMode mode_in = RegionMode::Causal);

  int n() const { return static_cast<int>(sigma_sq.size()); }
  FeasibleRegion relaxed() const { return FeasibleRegion(sigma_sq, energy, RegionMode::TotalOnly); }
};

struct FeasibilityVerdict {
  bool feasible = false;
  double worst_violation = 0.0;  // largest constraint excess, energy units (a-units for sign)
  int worst_index = -1;          // slot of the worst violation, -1 if none
};

FeasibilityVerdict check_feasible(const Eigen::VectorXd& a, const FeasibleRegion& region);

/// The region restricted to slots with positive variance, which are the only
/// free variables (zero-variance slots cost nothing and stay at a_t = 0).
///
///   x >= 0,   Σ_{i<=j} w_i x_i <= cap_j  (j < m-1, causal mode),   Σ w_i x_i = total
struct ReducedPolytope {
  std::vector<int> slots;  // original indices of the free variables
  Eigen::VectorXd w;       // σ² of the free slots
  Eigen::VectorXd caps;    // m-1 prefix caps (empty in total-only mode)
  double total = 0.0;
  bool causal = true;

  int m() const { return static_cast<int>(slots.size()); }
  /// Throws InfeasibleRegion when the total cannot be spent.
  static ReducedPolytope from_region(const FeasibleRegion& region);

  Eigen::VectorXd embed(const Eigen::VectorXd& x, int n) const;
  Eigen::VectorXd restrict(const Eigen::VectorXd& a) const;
};

}  // namespace ehalloc
