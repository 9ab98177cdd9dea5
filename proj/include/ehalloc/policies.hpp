#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ehalloc/energy.hpp"
#include "ehalloc/estimator.hpp"
#include "ehalloc/signal_model.hpp"
#include "ehalloc/solver.hpp"

namespace ehalloc {

enum class PolicyKind { Optimal, Relaxed, Greedy, MostMajorized, ParamGreedy, Equidistant, Upper, Lower };

/// A named policy; `window` is the window length of upper/lower (0 means
/// n / divisor), `delay` the optional initial delay t_d of equidistant.
struct PolicySpec {
  PolicyKind kind = PolicyKind::Optimal;
  int window = 0;
  int divisor = 1;
  std::optional<int> delay;

  /// Accepts "optimal", "relaxed", "greedy", "most-majorized", "param-greedy",
  /// "equidistant", "upper-<lw>", "lower-<lw>" (lw an integer, "n" or "n/<k>").
  static PolicySpec parse(const std::string& id);
  std::string name() const;
  /// Window length for a horizon of n slots.
  int window_for(int n) const { return window > 0 ? window : n / divisor; }
};

struct PolicyResult {
  std::string policy_id;
  PowerAllocation alloc;
  double mse = 0.0;
  double normalized_mse = 0.0;
  double wall_time = 0.0;  // seconds spent computing the allocation
  std::optional<SolverDiagnostics> diagnostics;
};

/// Equidistant sampling: one transmission every `delta` slots at Δr + t_d (0-based).
struct SamplingPlan {
  int n = 0;
  int delta = 0;
  int t_d = 0;

  /// Δ = n/s, t_d defaults to Δ-1. Throws PlanInvalid / DelayOutOfRange.
  static SamplingPlan make(int n, int s, std::optional<int> t_d = std::nullopt);
  int m() const { return n / delta; }
  std::vector<int> sample_slots() const;
};

/// a ≺ b: descending prefix sums of a never exceed those of b and the totals
/// agree, both within 1e-9 Σ|b|.
bool is_majorized(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Staircase allocation whose consumed energies are majorized by those of
/// every feasible allocation.
PowerAllocation most_majorized(const FeasibleRegion& region);

/// Recursively spends everything harvested so far in the slot with the
/// strongest remaining channel (ties go to the later slot).
PowerAllocation parameter_greedy(const FeasibleRegion& region, const ChannelTrace& channel);

/// Spends each packet when it arrives. Energy arriving at a zero-variance slot
/// is carried to the next positive-variance slot; `strict` makes that an error.
PowerAllocation greedy_policy(const FeasibleRegion& region, bool strict = false);

/// Transmits only at the plan's slots; each sample spends the energy of its
/// window as evenly as causality allows (static channel) or by water-filling
/// on the sampled gains (fading).
PowerAllocation equidistant_allocation(const FeasibleRegion& region, const ChannelTrace& channel,
                                       const NoiseModel& noise, const SamplingPlan& plan);

/// A_U-lw: per-window minimization of the uncorrelated error.
PowerAllocation sliding_window_upper(const FeasibleRegion& region, const ChannelTrace& channel,
                                     const NoiseModel& noise, int lw);

/// A_L-lw: per-window minimization of the flat-spectrum lower bound.
PowerAllocation sliding_window_lower(const SpectrumDecomposition& spectrum, const FeasibleRegion& region,
                                     const ChannelTrace& channel, const NoiseModel& noise, int lw);

/// Everything a policy may look at for one problem instance.
struct Problem {
  const CovarianceModel& model;
  const SpectrumDecomposition& spectrum;
  const ChannelTrace& channel;
  const EnergyTrace& energy;
  const NoiseModel& noise;
};

struct PolicyOptions {
  bool strict = false;
  SolverOptions solver;
};

/// Runs one policy and evaluates its MMSE. Throws the policy's error kinds;
/// every policy except greedy raises InfeasibleRegion when E_tot = 0.
PolicyResult run_policy(const PolicySpec& spec, const Problem& problem, const PolicyOptions& options = {});

}  // namespace ehalloc
