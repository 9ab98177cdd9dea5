#pragma once

#include <Eigen/Dense>

namespace ehalloc {

// Both routines work on consumed energies J over the free slots of a
// ReducedPolytope: `cumulative(j)` is the energy harvested up to free slot j
// (the last entry is the total, which must be spent exactly).

/// Most balanced feasible J: each step spends, at a constant rate, the
/// smallest average energy available over the upcoming slots; ties take the
/// longest stretch.
Eigen::VectorXd staircase(const Eigen::VectorXd& cumulative);

/// Minimizes Σ c_j / (1 + b_j J_j) under the causality caps and the total.
/// Within a stretch J_j = max(0, (√(c_j b_j) u - 1) / b_j) for a common level
/// u; stretches are chosen by the lowest level, ties take the longest stretch.
/// Slots with c_j b_j = 0 receive nothing unless no slot in the remainder can
/// use energy, in which case the remainder is spent as it arrives.
Eigen::VectorXd directional_waterfill(const Eigen::VectorXd& c, const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& cumulative);

/// Water level u that spends `energy` over slots [first, last] (∞ if none of
/// them can use energy, 0 when energy is 0).
double waterfill_level(const Eigen::VectorXd& c, const Eigen::VectorXd& b, int first, int last,
                       double energy);

}  // namespace ehalloc
