#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ehalloc/energy.hpp"
#include "ehalloc/estimator.hpp"
#include "ehalloc/policies.hpp"
#include "ehalloc/signal_model.hpp"

namespace ehalloc {

enum class EigenProfile { Geometric, Flat };
enum class UnitaryKind { Haar, Dft };
enum class UnitaryMode { Fixed, PerTrial };
enum class ChannelKind { Rayleigh, Static };

struct ExperimentConfig {
  int n = 16;
  int s = 4;
  double total_power = 16.0;
  double sigma_w_sq = 1e-3;
  EigenProfile eigen_profile = EigenProfile::Geometric;
  double geometric_ratio = 0.7;  // α_k = ratio^k, rescaled to sum to P_x
  UnitaryKind unitary = UnitaryKind::Haar;
  UnitaryMode unitary_mode = UnitaryMode::Fixed;
  std::uint64_t haar_seed = 1;
  std::vector<double> p_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double E0 = 1.0;
  ChannelKind channel = ChannelKind::Rayleigh;
  std::vector<PolicySpec> policies;
  int trials = 500;
  std::uint64_t master_seed = 1;
  bool strict = false;
  bool keep_records = true;

  /// Throws InvalidConfig (or the signal-model errors) on bad fields.
  void validate() const;
  Eigen::VectorXd eigenvalues() const;
  /// The covariance used by a trial whose seed is `trial_seed`.
  CovarianceModel build_model(std::uint64_t trial_seed) const;
};

EnergyTrace sample_bernoulli_arrivals(double p, int n, double E0, std::uint64_t seed);
ChannelTrace sample_rayleigh_channel(int n, std::uint64_t seed);

/// Seed of trial k at grid point j.
std::uint64_t trial_seed(std::uint64_t master_seed, int j, int k);

struct TrialRecord {
  double p = 0.0;
  int p_index = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string policy;
  double nmse = 1.0;
  double wall_time = 0.0;
  bool converged = true;
  bool failed = false;
  std::string error;
};

struct CurvePoint {
  std::string policy;
  double p = 0.0;
  double mean_nmse = 0.0;
  double std_nmse = 0.0;
  int trials = 0;
  int failures = 0;
};

/// e_G = nmse(upper-n) - nmse(optimal), per grid point.
struct GapPoint {
  double p = 0.0;
  double mean_gap = 0.0;
  double std_gap = 0.0;
  int trials = 0;
};

/// A trial where relaxed <= optimal <= heuristic failed beyond 1e-8.
struct OrderingViolation {
  double p = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string policy;
  double excess = 0.0;
};

struct TimingRow {
  int n = 0;
  std::string policy;
  double mean_time = 0.0;        // seconds
  double normalized_time = 0.0;  // relative to optimal at the smallest n
  int trials = 0;
};

struct AggregateStats {
  std::vector<CurvePoint> curves;  // grouped by policy in config order, then p
  std::vector<GapPoint> gaps;      // empty unless both optimal and upper-n run
  std::vector<OrderingViolation> violations;
  std::vector<TrialRecord> records;  // (j, k, policy) order; empty unless keep_records
  /// Mean allocation time per policy over trials with energy, relative to
  /// optimal (or to the first policy when optimal is not run).
  std::vector<TimingRow> timing;
  int failures = 0;

  const CurvePoint* curve(const std::string& policy, double p) const;
};

/// Runs all trials, in parallel over (p, trial) with `jobs` threads (0 means
/// the OpenMP default); results do not depend on `jobs`.
AggregateStats run_experiment(const ExperimentConfig& config, int jobs = 0);
/// Single-threaded reference of run_experiment.
AggregateStats run_experiment_serial(const ExperimentConfig& config);

struct TimingConfig {
  std::vector<int> sizes{16, 32, 64};
  double p = 0.3;
  int trials = 20;
  double sigma_w_sq = 1e-3;
  double E0 = 1.0;
  EigenProfile eigen_profile = EigenProfile::Geometric;
  std::uint64_t master_seed = 1;
  std::vector<PolicySpec> policies;  // defaults to optimal, upper-2, upper-n/2, upper-n
};

/// Mean wall time per policy with s = n, Haar basis and Rayleigh fading.
/// Trials with no harvested energy are redrawn.
std::vector<TimingRow> timing_benchmark(const TimingConfig& config);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

void write_curves_csv(std::ostream& os, const AggregateStats& stats);
void write_gaps_csv(std::ostream& os, const AggregateStats& stats);
void write_timing_csv(std::ostream& os, const std::vector<TimingRow>& rows);
void write_trials_jsonl(std::ostream& os, const AggregateStats& stats);

}  // namespace ehalloc
