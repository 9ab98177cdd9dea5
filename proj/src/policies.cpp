#include "ehalloc/policies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "ehalloc/errors.hpp"
#include "ehalloc/waterfill.hpp"

namespace ehalloc {

namespace {

void require_energy(const FeasibleRegion& region) {
  if (!(region.energy.total() > 0.0)) {
    fail(ErrorKind::InfeasibleRegion, "no harvested energy to allocate (E_tot = 0)");
  }
}

// Harvested energy available up to each free slot; the last entry is the total.
Eigen::VectorXd free_cumulative(const ReducedPolytope& poly) {
  Eigen::VectorXd cum(poly.m());
  if (poly.m() == 0) return cum;
  if (poly.causal) cum.head(poly.m() - 1) = poly.caps;
  cum(poly.m() - 1) = poly.total;
  return cum;
}

PowerAllocation from_energy(const ReducedPolytope& poly, const Eigen::VectorXd& J, const FeasibleRegion& region) {
  const Eigen::VectorXd x = J.cwiseQuotient(poly.w);
  return PowerAllocation(poly.embed(x, region.n()), region.sigma_sq);
}

bool constant_gain(const Eigen::VectorXd& g) {
  if (g.size() == 0) return true;
  return (g.array() - g(0)).abs().maxCoeff() <= 1e-12 * std::max(std::abs(g(0)), 1e-300);
}

// Solves every non-overlapping window of length lw independently with
// Σ c_j / (1 + γ|h_j|² J_j), the window's own arrivals and its own total.
PowerAllocation windowed(const FeasibleRegion& region, const ChannelTrace& channel, const NoiseModel& noise,
                         int lw, const std::function<double(int)>& weight) {
  const int n = region.n();
  if (channel.n() != n) fail(ErrorKind::DimensionMismatch, "channel length differs from region");
  if (lw <= 0 || lw > n || n % lw != 0) {
    fail(ErrorKind::WindowError, "window length " + std::to_string(lw) + " does not divide n = " + std::to_string(n));
  }
  require_energy(region);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  for (int start = 0; start < n; start += lw) {
    const EnergyTrace energy(region.energy.packets().segment(start, lw));
    if (!(energy.total() > 0.0)) continue;
    const FeasibleRegion window(region.sigma_sq.segment(start, lw), energy);
    const ReducedPolytope poly = ReducedPolytope::from_region(window);
    Eigen::VectorXd c(poly.m()), b(poly.m());
    for (int j = 0; j < poly.m(); ++j) {
      const int t = start + poly.slots[j];
      c(j) = weight(t);
      b(j) = noise.gamma() * channel.gain_sq()(t);
    }
    const Eigen::VectorXd J = directional_waterfill(c, b, free_cumulative(poly));
    for (int j = 0; j < poly.m(); ++j) a(start + poly.slots[j]) = J(j) / poly.w(j);
  }
  return PowerAllocation(a, region.sigma_sq);
}

}  // namespace

PolicySpec PolicySpec::parse(const std::string& id) {
  PolicySpec spec;
  auto windowed_kind = [&](const std::string& prefix, PolicyKind kind) {
    if (id.rfind(prefix, 0) != 0) return false;
    const std::string tail = id.substr(prefix.size());
    spec.kind = kind;
    if (tail == "n") return true;
    if (tail.rfind("n/", 0) == 0) {
      const std::string k = tail.substr(2);
      if (k.empty() || !std::all_of(k.begin(), k.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) ||
          std::stoi(k) <= 0) {
        fail(ErrorKind::InvalidConfig, "bad window divisor in policy '" + id + "'");
      }
      spec.divisor = std::stoi(k);
      return true;
    }
    if (tail.empty() || !std::all_of(tail.begin(), tail.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      fail(ErrorKind::InvalidConfig, "bad window length in policy '" + id + "'");
    }
    spec.window = std::stoi(tail);
    if (spec.window <= 0) fail(ErrorKind::InvalidConfig, "window length must be positive in '" + id + "'");
    return true;
  };
  if (id == "optimal") spec.kind = PolicyKind::Optimal;
  else if (id == "relaxed") spec.kind = PolicyKind::Relaxed;
  else if (id == "greedy") spec.kind = PolicyKind::Greedy;
  else if (id == "most-majorized") spec.kind = PolicyKind::MostMajorized;
  else if (id == "param-greedy") spec.kind = PolicyKind::ParamGreedy;
  else if (id == "equidistant") spec.kind = PolicyKind::Equidistant;
  else if (windowed_kind("upper-", PolicyKind::Upper) || windowed_kind("lower-", PolicyKind::Lower)) {
  } else {
    fail(ErrorKind::InvalidConfig, "unknown policy '" + id + "'");
  }
  return spec;
}

std::string PolicySpec::name() const {
  const std::string w = window > 0 ? std::to_string(window) : divisor == 1 ? "n" : "n/" + std::to_string(divisor);
  switch (kind) {
    case PolicyKind::Optimal: return "optimal";
    case PolicyKind::Relaxed: return "relaxed";
    case PolicyKind::Greedy: return "greedy";
    case PolicyKind::MostMajorized: return "most-majorized";
    case PolicyKind::ParamGreedy: return "param-greedy";
    case PolicyKind::Equidistant: return "equidistant";
    case PolicyKind::Upper: return "upper-" + w;
    case PolicyKind::Lower: return "lower-" + w;
  }
  return "unknown";
}

SamplingPlan SamplingPlan::make(int n, int s, std::optional<int> t_d) {
  if (n < 1 || s < 1 || s > n || n % s != 0) {
    fail(ErrorKind::PlanInvalid, "equidistant sampling needs s | n (n = " + std::to_string(n) +
                                     ", s = " + std::to_string(s) + ")");
  }
  SamplingPlan plan;
  plan.n = n;
  plan.delta = n / s;
  plan.t_d = t_d.value_or(plan.delta - 1);
  if (plan.t_d < 0 || plan.t_d >= plan.delta) {
    fail(ErrorKind::DelayOutOfRange, "t_d = " + std::to_string(plan.t_d) + " outside [0, " +
                                         std::to_string(plan.delta - 1) + "]");
  }
  return plan;
}

std::vector<int> SamplingPlan::sample_slots() const {
  std::vector<int> slots;
  for (int r = 0; r < m(); ++r) slots.push_back(delta * r + t_d);
  return slots;
}

bool is_majorized(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) fail(ErrorKind::LengthMismatch, "majorization needs equal lengths");
  std::vector<double> sa(a.data(), a.data() + a.size());
  std::vector<double> sb(b.data(), b.data() + b.size());
  std::sort(sa.begin(), sa.end(), std::greater<>());
  std::sort(sb.begin(), sb.end(), std::greater<>());
  const double tol = 1e-9 * b.cwiseAbs().sum();
  double pa = 0.0, pb = 0.0;
  for (size_t k = 0; k < sa.size(); ++k) {
    pa += sa[k];
    pb += sb[k];
    if (k + 1 < sa.size() && pa > pb + tol) return false;
  }
  return std::abs(pa - pb) <= tol;
}

PowerAllocation most_majorized(const FeasibleRegion& region) {
  require_energy(region);
  const ReducedPolytope poly = ReducedPolytope::from_region(region);
  return from_energy(poly, staircase(free_cumulative(poly)), region);
}

PowerAllocation parameter_greedy(const FeasibleRegion& region, const ChannelTrace& channel) {
  if (channel.n() != region.n()) fail(ErrorKind::DimensionMismatch, "channel length differs from region");
  require_energy(region);
  const ReducedPolytope poly = ReducedPolytope::from_region(region);
  const Eigen::VectorXd cum = free_cumulative(poly);
  Eigen::VectorXd J = Eigen::VectorXd::Zero(poly.m());
  double spent = 0.0;
  int first = 0;
  while (first < poly.m()) {
    int best = first;
    for (int j = first; j < poly.m(); ++j) {
      if (channel.gain_sq()(poly.slots[j]) >= channel.gain_sq()(poly.slots[best])) best = j;
    }
    J(best) = std::max(cum(best) - spent, 0.0);
    spent = std::max(spent, cum(best));
    first = best + 1;
  }
  return from_energy(poly, J, region);
}

PowerAllocation greedy_policy(const FeasibleRegion& region, bool strict) {
  const int n = region.n();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  double carry = 0.0;
  for (int t = 0; t < n; ++t) {
    const double e = region.energy.packets()(t);
    if (region.sigma_sq(t) > 0.0) {
      a(t) = (carry + e) / region.sigma_sq(t);
      carry = 0.0;
    } else {
      if (e > 0.0 && strict) {
        fail(ErrorKind::ZeroVarianceWithEnergy, "energy arrives at zero-variance slot " + std::to_string(t + 1));
      }
      carry += e;
    }
  }
  if (carry > 0.0) {
    fail(ErrorKind::InfeasibleRegion, "energy arriving after the last positive-variance slot cannot be spent");
  }
  return PowerAllocation(a, region.sigma_sq);
}

PowerAllocation equidistant_allocation(const FeasibleRegion& region, const ChannelTrace& channel,
                                       const NoiseModel& noise, const SamplingPlan& plan) {
  const int n = region.n();
  if (plan.n != n) fail(ErrorKind::PlanInvalid, "plan length differs from region");
  if (channel.n() != n) fail(ErrorKind::DimensionMismatch, "channel length differs from region");
  require_energy(region);
  const std::vector<int> slots = plan.sample_slots();
  const Eigen::VectorXd& cum_all = region.energy.cumulative();
  if (cum_all(slots.back()) < region.energy.total() * (1.0 - 1e-12)) {
    fail(ErrorKind::PlanInvalid, "energy arriving after the last sample (slot " + std::to_string(slots.back() + 1) +
                                     ") cannot be spent; use a later t_d");
  }
  const int m = plan.m();
  Eigen::VectorXd cum(m), w(m), gain(m);
  for (int r = 0; r < m; ++r) {
    const int t = slots[static_cast<size_t>(r)];
    if (!(region.sigma_sq(t) > 0.0)) fail(ErrorKind::PlanInvalid, "sample slot has zero variance");
    cum(r) = r + 1 == m ? region.energy.total() : cum_all(t);
    w(r) = region.sigma_sq(t);
    gain(r) = noise.gamma() * channel.gain_sq()(t);
  }
  const Eigen::VectorXd J =
      constant_gain(gain) ? staircase(cum) : directional_waterfill(Eigen::VectorXd::Ones(m), gain, cum);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r) a(slots[static_cast<size_t>(r)]) = J(r) / w(r);
  return PowerAllocation(a, region.sigma_sq);
}

PowerAllocation sliding_window_upper(const FeasibleRegion& region, const ChannelTrace& channel,
                                     const NoiseModel& noise, int lw) {
  return windowed(region, channel, noise, lw, [&](int t) { return region.sigma_sq(t); });
}

PowerAllocation sliding_window_lower(const SpectrumDecomposition& spectrum, const FeasibleRegion& region,
                                     const ChannelTrace& channel, const NoiseModel& noise, int lw) {
  if (!spectrum.is_flat()) fail(ErrorKind::FlatSpectrumRequired, "lower-bound windows need a flat spectrum");
  return windowed(region, channel, noise, lw, [](int) { return 1.0; });
}

PolicyResult run_policy(const PolicySpec& spec, const Problem& problem, const PolicyOptions& options) {
  const int n = problem.model.n();
  if (problem.energy.n() != n || problem.channel.n() != n || problem.spectrum.n() != n) {
    fail(ErrorKind::DimensionMismatch, "instance components differ in length");
  }
  const FeasibleRegion region(problem.model.variances(), problem.energy);
  const int lw = spec.window_for(n);

  PolicyResult result;
  result.policy_id = spec.name();
  const auto start = std::chrono::steady_clock::now();
  switch (spec.kind) {
    case PolicyKind::Optimal:
    case PolicyKind::Relaxed: {
      SolveOutcome out = spec.kind == PolicyKind::Optimal
                             ? solve_optimal(problem.spectrum, problem.channel, region, problem.noise, options.solver)
                             : solve_relaxed(problem.spectrum, problem.channel, region, problem.noise, options.solver);
      result.alloc = PowerAllocation(out.a, region.sigma_sq);
      result.diagnostics = std::move(out.diagnostics);
      break;
    }
    case PolicyKind::Greedy:
      result.alloc = greedy_policy(region, options.strict);
      break;
    case PolicyKind::MostMajorized:
      result.alloc = most_majorized(region);
      break;
    case PolicyKind::ParamGreedy:
      result.alloc = parameter_greedy(region, problem.channel);
      break;
    case PolicyKind::Equidistant: {
      if (!problem.spectrum.is_flat()) {
        fail(ErrorKind::FlatSpectrumRequired, "equidistant sampling needs a flat spectrum");
      }
      const SamplingPlan plan = SamplingPlan::make(n, problem.spectrum.rank(), spec.delay);
      result.alloc = equidistant_allocation(region, problem.channel, problem.noise, plan);
      break;
    }
    case PolicyKind::Upper:
      result.alloc = sliding_window_upper(region, problem.channel, problem.noise, lw);
      break;
    case PolicyKind::Lower:
      result.alloc = sliding_window_lower(problem.spectrum, region, problem.channel, problem.noise, lw);
      break;
  }
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.mse = mmse_woodbury(problem.spectrum, problem.channel, result.alloc.a, problem.noise);
  result.normalized_mse = normalized(result.mse, problem.model.total_power());
  return result;
}

}  // namespace ehalloc
