#include "ehalloc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <omp.h>

#include <json.hpp>

#include "ehalloc/errors.hpp"
#include "ehalloc/rng.hpp"

namespace ehalloc {

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
  int count = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.count = static_cast<int>(v.size());
  if (v.empty()) {
    m.mean = m.std = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

std::vector<TrialRecord> run_trial(const ExperimentConfig& config, const CovarianceModel* fixed_model,
                                   const SpectrumDecomposition* fixed_spectrum, int j, int k) {
  const double p = config.p_grid[static_cast<size_t>(j)];
  const std::uint64_t seed = trial_seed(config.master_seed, j, k);
  const EnergyTrace energy =
      sample_bernoulli_arrivals(p, config.n, config.E0, derive_seed(seed, static_cast<std::uint64_t>(Stream::Arrivals)));
  const ChannelTrace channel = config.channel == ChannelKind::Rayleigh
                                   ? sample_rayleigh_channel(config.n, derive_seed(seed, static_cast<std::uint64_t>(Stream::Channel)))
                                   : ChannelTrace::unit(config.n);

  std::vector<TrialRecord> out;
  out.reserve(config.policies.size());
  for (const PolicySpec& spec : config.policies) {
    TrialRecord rec;
    rec.p = p;
    rec.p_index = j;
    rec.trial = k;
    rec.seed = seed;
    rec.policy = spec.name();
    out.push_back(rec);
  }
  if (!(energy.total() > 0.0)) return out;  // nothing to send: err = P_x for every policy

  std::optional<CovarianceModel> own_model;
  std::optional<SpectrumDecomposition> own_spectrum;
  if (fixed_model == nullptr) {
    own_model.emplace(config.build_model(seed));
    own_spectrum.emplace(reduced_evd(*own_model));
  }
  const CovarianceModel& model = fixed_model ? *fixed_model : *own_model;
  const SpectrumDecomposition& spectrum = fixed_spectrum ? *fixed_spectrum : *own_spectrum;
  const NoiseModel noise(config.sigma_w_sq);
  const Problem problem{model, spectrum, channel, energy, noise};
  PolicyOptions options;
  options.strict = config.strict;

  for (size_t q = 0; q < config.policies.size(); ++q) {
    TrialRecord& rec = out[q];
    try {
      const PolicyResult r = run_policy(config.policies[q], problem, options);
      rec.nmse = r.normalized_mse;
      rec.wall_time = r.wall_time;
      rec.converged = r.diagnostics ? r.diagnostics->converged : true;
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.converged = false;
      rec.error = e.what();
    }
  }
  return out;
}

AggregateStats aggregate(const ExperimentConfig& config, std::vector<std::vector<TrialRecord>>& per_trial) {
  AggregateStats stats;
  const int grid = static_cast<int>(config.p_grid.size());
  const int P = static_cast<int>(config.policies.size());
  auto at = [&](int j, int k) -> const std::vector<TrialRecord>& {
    return per_trial[static_cast<size_t>(j) * static_cast<size_t>(config.trials) + static_cast<size_t>(k)];
  };

  for (int q = 0; q < P; ++q) {
    for (int j = 0; j < grid; ++j) {
      std::vector<double> v;
      int failures = 0;
      for (int k = 0; k < config.trials; ++k) {
        const TrialRecord& r = at(j, k)[static_cast<size_t>(q)];
        if (r.failed) ++failures;
        else v.push_back(r.nmse);
      }
      const Moments m = moments(v);
      stats.curves.push_back({config.policies[static_cast<size_t>(q)].name(), config.p_grid[static_cast<size_t>(j)],
                              m.mean, m.std, m.count, failures});
      stats.failures += failures;
    }
  }

  int opt = -1, upper_n = -1, relaxed = -1;
  for (int q = 0; q < P; ++q) {
    const PolicySpec& spec = config.policies[static_cast<size_t>(q)];
    if (spec.kind == PolicyKind::Optimal && opt < 0) opt = q;
    if (spec.kind == PolicyKind::Relaxed && relaxed < 0) relaxed = q;
    if (spec.kind == PolicyKind::Upper && spec.window_for(config.n) == config.n && upper_n < 0) upper_n = q;
  }
  if (opt >= 0 && upper_n >= 0) {
    for (int j = 0; j < grid; ++j) {
      std::vector<double> v;
      for (int k = 0; k < config.trials; ++k) {
        const auto& recs = at(j, k);
        if (!recs[static_cast<size_t>(opt)].failed && !recs[static_cast<size_t>(upper_n)].failed) {
          v.push_back(recs[static_cast<size_t>(upper_n)].nmse - recs[static_cast<size_t>(opt)].nmse);
        }
      }
      const Moments m = moments(v);
      stats.gaps.push_back({config.p_grid[static_cast<size_t>(j)], m.mean, m.std, m.count});
    }
  }

  constexpr double slack = 1e-8;
  for (int j = 0; j < grid; ++j) {
    for (int k = 0; k < config.trials; ++k) {
      const auto& recs = at(j, k);
      auto flag = [&](int q, double excess) {
        if (excess > slack) {
          const TrialRecord& r = recs[static_cast<size_t>(q)];
          stats.violations.push_back({r.p, r.trial, r.seed, r.policy, excess});
        }
      };
      if (relaxed >= 0 && opt >= 0 && !recs[static_cast<size_t>(relaxed)].failed && !recs[static_cast<size_t>(opt)].failed) {
        flag(relaxed, recs[static_cast<size_t>(relaxed)].nmse - recs[static_cast<size_t>(opt)].nmse);
      }
      if (opt < 0 || recs[static_cast<size_t>(opt)].failed) continue;
      for (int q = 0; q < P; ++q) {
        if (q == opt || q == relaxed || recs[static_cast<size_t>(q)].failed) continue;
        flag(q, recs[static_cast<size_t>(opt)].nmse - recs[static_cast<size_t>(q)].nmse);
      }
    }
  }

  std::vector<double> time_sum(static_cast<size_t>(P), 0.0);
  std::vector<int> time_count(static_cast<size_t>(P), 0);
  for (const auto& recs : per_trial) {
    for (int q = 0; q < P; ++q) {
      const TrialRecord& r = recs[static_cast<size_t>(q)];
      if (!r.failed && r.wall_time > 0.0) {
        time_sum[static_cast<size_t>(q)] += r.wall_time;
        ++time_count[static_cast<size_t>(q)];
      }
    }
  }
  const int ref = opt >= 0 ? opt : 0;
  const double ref_time = time_count[static_cast<size_t>(ref)] > 0
                              ? time_sum[static_cast<size_t>(ref)] / time_count[static_cast<size_t>(ref)]
                              : 0.0;
  for (int q = 0; q < P; ++q) {
    const int cnt = time_count[static_cast<size_t>(q)];
    const double mean = cnt > 0 ? time_sum[static_cast<size_t>(q)] / cnt : 0.0;
    stats.timing.push_back({config.n, config.policies[static_cast<size_t>(q)].name(), mean,
                            ref_time > 0.0 ? mean / ref_time : 0.0, cnt});
  }

  if (config.keep_records) {
    for (auto& recs : per_trial) {
      for (auto& r : recs) stats.records.push_back(std::move(r));
    }
  }
  return stats;
}

AggregateStats run(const ExperimentConfig& config, bool parallel, int jobs) {
  config.validate();
  std::optional<CovarianceModel> fixed_model;
  std::optional<SpectrumDecomposition> fixed_spectrum;
  if (config.unitary_mode == UnitaryMode::Fixed || config.unitary == UnitaryKind::Dft) {
    fixed_model.emplace(config.build_model(0));
    fixed_spectrum.emplace(reduced_evd(*fixed_model));
  }
  const CovarianceModel* model = fixed_model ? &*fixed_model : nullptr;
  const SpectrumDecomposition* spectrum = fixed_spectrum ? &*fixed_spectrum : nullptr;

  const int grid = static_cast<int>(config.p_grid.size());
  const long total = static_cast<long>(grid) * config.trials;
  std::vector<std::vector<TrialRecord>> per_trial(static_cast<size_t>(total));
  if (parallel) {
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long idx = 0; idx < total; ++idx) {
      per_trial[static_cast<size_t>(idx)] =
          run_trial(config, model, spectrum, static_cast<int>(idx / config.trials), static_cast<int>(idx % config.trials));
    }
  } else {
    for (long idx = 0; idx < total; ++idx) {
      per_trial[static_cast<size_t>(idx)] =
          run_trial(config, model, spectrum, static_cast<int>(idx / config.trials), static_cast<int>(idx % config.trials));
    }
  }
  return aggregate(config, per_trial);
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t q = i; q <= j; ++q) r[order[q]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 1) fail(ErrorKind::InvalidConfig, "n must be positive");
  if (s < 1 || s > n) fail(ErrorKind::RankError, "need 1 <= s <= n");
  if (!(total_power > 0.0)) fail(ErrorKind::InvalidConfig, "P_x must be positive");
  if (!(sigma_w_sq > 0.0)) fail(ErrorKind::InvalidConfig, "sigma_w_sq must be positive");
  if (eigen_profile == EigenProfile::Geometric && !(geometric_ratio > 0.0)) {
    fail(ErrorKind::InvalidConfig, "geometric ratio must be positive");
  }
  if (p_grid.empty()) fail(ErrorKind::InvalidConfig, "p grid is empty");
  for (double p : p_grid) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::InvalidConfig, "p grid values must lie in [0, 1]");
  }
  if (!(E0 > 0.0)) fail(ErrorKind::InvalidConfig, "E0 must be positive");
  if (policies.empty()) fail(ErrorKind::InvalidConfig, "no policies listed");
  if (trials < 1) fail(ErrorKind::InvalidConfig, "trials must be at least 1");
}

Eigen::VectorXd ExperimentConfig::eigenvalues() const {
  Eigen::VectorXd lambda(s);
  for (int k = 0; k < s; ++k) {
    lambda(k) = eigen_profile == EigenProfile::Geometric ? std::pow(geometric_ratio, k) : 1.0;
  }
  return lambda * (total_power / lambda.sum());
}

CovarianceModel ExperimentConfig::build_model(std::uint64_t trial_seed_value) const {
  const Eigen::VectorXd lambda = eigenvalues();
  if (unitary == UnitaryKind::Dft) {
    Eigen::VectorXd spectrum = Eigen::VectorXd::Zero(n);
    spectrum.head(s) = lambda;
    return circulant_from_spectrum(spectrum);
  }
  const std::uint64_t seed = unitary_mode == UnitaryMode::Fixed
                                 ? haar_seed
                                 : derive_seed(trial_seed_value, static_cast<std::uint64_t>(Stream::Unitary));
  return random_haar_covariance(n, lambda, seed);
}

EnergyTrace sample_bernoulli_arrivals(double p, int n, double E0, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::InvalidConfig, "arrival probability must lie in [0, 1]");
  Engine gen(seed);
  std::bernoulli_distribution coin(p);
  Eigen::VectorXd E(n);
  for (int t = 0; t < n; ++t) E(t) = coin(gen) ? E0 : 0.0;
  return EnergyTrace(E);
}

ChannelTrace sample_rayleigh_channel(int n, std::uint64_t seed) {
  Engine gen(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::VectorXcd h(n);
  for (int t = 0; t < n; ++t) {
    const double re = normal(gen);
    const double im = normal(gen);
    h(t) = cplx(re, im);
  }
  return ChannelTrace(h);
}

std::uint64_t trial_seed(std::uint64_t master_seed, int j, int k) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k));
}

const CurvePoint* AggregateStats::curve(const std::string& policy, double p) const {
  for (const CurvePoint& c : curves) {
    if (c.policy == policy && std::abs(c.p - p) < 1e-12) return &c;
  }
  return nullptr;
}

AggregateStats run_experiment(const ExperimentConfig& config, int jobs) { return run(config, true, jobs); }

AggregateStats run_experiment_serial(const ExperimentConfig& config) { return run(config, false, 1); }

std::vector<TimingRow> timing_benchmark(const TimingConfig& config) {
  std::vector<PolicySpec> policies = config.policies;
  if (policies.empty()) {
    for (const char* id : {"optimal", "upper-2", "upper-n/2", "upper-n"}) policies.push_back(PolicySpec::parse(id));
  }
  if (config.trials < 1) fail(ErrorKind::InvalidConfig, "timing needs at least one trial");
  std::vector<TimingRow> rows;
  const NoiseModel noise(config.sigma_w_sq);
  for (size_t si = 0; si < config.sizes.size(); ++si) {
    const int n = config.sizes[si];
    ExperimentConfig shape;
    shape.n = n;
    shape.s = n;
    shape.total_power = n;
    shape.eigen_profile = config.eigen_profile;
    shape.haar_seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(n),
                                  static_cast<std::uint64_t>(Stream::Unitary));
    const CovarianceModel model = shape.build_model(0);
    const SpectrumDecomposition spectrum = reduced_evd(model);

    std::vector<double> total(policies.size(), 0.0);
    int done = 0;
    for (int attempt = 0; done < config.trials; ++attempt) {
      const std::uint64_t seed = trial_seed(config.master_seed, static_cast<int>(si), attempt);
      const EnergyTrace energy = sample_bernoulli_arrivals(
          config.p, n, config.E0, derive_seed(seed, static_cast<std::uint64_t>(Stream::Arrivals)));
      if (!(energy.total() > 0.0)) continue;
      const ChannelTrace channel =
          sample_rayleigh_channel(n, derive_seed(seed, static_cast<std::uint64_t>(Stream::Channel)));
      const Problem problem{model, spectrum, channel, energy, noise};
      for (size_t q = 0; q < policies.size(); ++q) total[q] += run_policy(policies[q], problem).wall_time;
      ++done;
    }
    for (size_t q = 0; q < policies.size(); ++q) {
      rows.push_back({n, policies[q].name(), total[q] / config.trials, 0.0, config.trials});
    }
  }
  double reference = 0.0;
  for (const TimingRow& r : rows) {
    if (r.n == config.sizes.front() && r.policy == "optimal") reference = r.mean_time;
  }
  if (reference <= 0.0 && !rows.empty()) reference = rows.front().mean_time;
  for (TimingRow& r : rows) r.normalized_time = reference > 0.0 ? r.mean_time / reference : 0.0;
  return rows;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorKind::LengthMismatch, "spearman needs equal lengths");
  if (x.size() < 2) return 0.0;
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

void write_curves_csv(std::ostream& os, const AggregateStats& stats) {
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "policy,p,mean_nmse,std_nmse,trials\n";
  for (const CurvePoint& c : stats.curves) {
    os << c.policy << ',' << c.p << ',' << c.mean_nmse << ',' << c.std_nmse << ',' << c.trials << '\n';
  }
}

void write_gaps_csv(std::ostream& os, const AggregateStats& stats) {
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "p,mean_gap,std_gap\n";
  for (const GapPoint& g : stats.gaps) os << g.p << ',' << g.mean_gap << ',' << g.std_gap << '\n';
}

void write_timing_csv(std::ostream& os, const std::vector<TimingRow>& rows) {
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "n,policy,normalized_time\n";
  for (const TimingRow& r : rows) os << r.n << ',' << r.policy << ',' << r.normalized_time << '\n';
}

void write_trials_jsonl(std::ostream& os, const AggregateStats& stats) {
  for (const TrialRecord& r : stats.records) {
    nlohmann::json j = {{"p", r.p},          {"trial", r.trial},         {"seed", r.seed},
                        {"policy", r.policy}, {"nmse", r.nmse},           {"wall_time", r.wall_time},
                        {"converged", r.converged}};
    if (r.failed) j["error"] = r.error;
    os << j.dump() << '\n';
  }
}

}  // namespace ehalloc
