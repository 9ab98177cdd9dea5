#include "ehalloc/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "ehalloc/config.hpp"
#include "ehalloc/errors.hpp"
#include "ehalloc/harness.hpp"
#include "ehalloc/policies.hpp"
#include "ehalloc/validation.hpp"

namespace ehalloc {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> only;
  bool strict = false;
  bool records = false;
};

Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int jobs_from(const Options& opt) {
  if (opt.jobs) return *opt.jobs;
  if (const char* env = std::getenv("EH_ALLOCATE_JOBS")) {
    try {
      const int j = std::stoi(env);
      if (j >= 0) return j;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::InvalidConfig, std::string("EH_ALLOCATE_JOBS must be a nonnegative integer, got '") + env + "'");
  }
  return 0;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::InvalidConfig, "cannot write '" + path.string() + "'");
  body(os);
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::InvalidConfig, "cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

int cmd_solve(const Options& opt, std::ostream& out) {
  Instance inst = instance_from_json(read_json_file(opt.config), opt.seed);
  const Problem problem{inst.model, inst.spectrum, inst.channel, inst.energy, inst.noise};
  PolicyOptions options;
  options.strict = opt.strict;
  const PolicyResult r = run_policy(inst.policy, problem, options);
  const FeasibleRegion region(inst.model.variances(), inst.energy);
  const FeasibilityVerdict verdict = check_feasible(r.alloc.a, region);

  Json doc{{"policy", r.policy_id},
           {"a", vector_json(r.alloc.a)},
           {"energy", vector_json(r.alloc.energy)},
           {"mse", r.mse},
           {"normalized_mse", r.normalized_mse},
           {"P_x", inst.model.total_power()},
           {"feasible", verdict.feasible},
           {"worst_violation", verdict.worst_violation},
           {"wall_time", r.wall_time}};
  bool converged = true;
  if (r.diagnostics) {
    const SolverDiagnostics& d = *r.diagnostics;
    converged = d.converged;
    doc["converged"] = d.converged;
    doc["kkt_residual"] = d.kkt_residual;
    doc["iterations"] = d.iterations;
    doc["multipliers"] = Json{{"eta", vector_json(d.eta)},
                              {"nu", d.nu},
                              {"mu", vector_json(d.mu)},
                              {"kappa", vector_json(d.kappa)},
                              {"stationarity_residual", d.stationarity_residual},
                              {"complementarity", d.complementarity}};
  } else {
    doc["converged"] = true;
    doc["kkt_residual"] = nullptr;
  }
  out << doc.dump(2) << '\n';
  if (!opt.out_dir.empty()) {
    write_file(ensure_dir(opt.out_dir) / "solution.json", [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
  }
  return converged && verdict.feasible ? kExitOk : kExitNotConverged;
}

ExperimentConfig load_experiment(const Options& opt) {
  Json doc = read_json_file(opt.config);
  if (doc.is_object() && doc.contains("config") && doc.at("config").is_object()) doc = doc.at("config");  // a manifest
  ExperimentConfig config = experiment_from_json(doc);
  if (opt.seed) config.master_seed = *opt.seed;
  if (opt.strict) config.strict = true;
  config.keep_records = true;
  return config;
}

int cmd_experiment(const Options& opt, std::ostream& out) {
  const ExperimentConfig config = load_experiment(opt);
  const int jobs = jobs_from(opt);
  const AggregateStats stats = run_experiment(config, jobs);
  const fs::path dir = ensure_dir(opt.out_dir.empty() ? "." : opt.out_dir);
  write_file(dir / "curves.csv", [&](std::ostream& os) { write_curves_csv(os, stats); });
  write_file(dir / "gaps.csv", [&](std::ostream& os) { write_gaps_csv(os, stats); });
  write_file(dir / "timing.csv", [&](std::ostream& os) { write_timing_csv(os, stats.timing); });
  Json outputs = {"curves.csv", "gaps.csv", "timing.csv"};
  if (opt.records) {
    write_file(dir / "trials.jsonl", [&](std::ostream& os) { write_trials_jsonl(os, stats); });
    outputs.push_back("trials.jsonl");
  }
  const Json manifest{{"config", experiment_to_json(config)},
                      {"master_seed", config.master_seed},
                      {"seed_derivation", "trial seed = derive_seed(master_seed, p_index, trial) with splitmix64; "
                                          "streams 1 = arrivals, 2 = channel, 3 = unitary"},
                      {"outputs", outputs}};
  write_file(dir / "manifest.json", [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });

  out << std::setprecision(6);
  out << "policy            p      mean_nmse    std_nmse     trials\n";
  for (const CurvePoint& c : stats.curves) {
    out << std::left << std::setw(16) << c.policy << "  " << std::setw(5) << c.p << "  " << std::setw(11)
        << c.mean_nmse << "  " << std::setw(11) << c.std_nmse << "  " << c.trials << '\n';
  }
  if (stats.failures > 0) out << "policy failures: " << stats.failures << " (see trials.jsonl with --records)\n";
  for (const OrderingViolation& v : stats.violations) {
    out << "ordering violation: " << v.policy << " p=" << v.p << " trial=" << v.trial << " seed=" << v.seed
        << " excess=" << v.excess << '\n';
  }
  out << "wrote " << dir.string() << '\n';
  return kExitOk;
}

int cmd_bench(const Options& opt, std::ostream& out) {
  TimingConfig config;
  if (!opt.config.empty()) {
    Json doc = read_json_file(opt.config);
    if (doc.contains("timing")) doc = doc.at("timing");
    config = timing_from_json(doc);
  }
  if (opt.seed) config.master_seed = *opt.seed;
  const std::vector<TimingRow> rows = timing_benchmark(config);
  write_file(ensure_dir(opt.out_dir.empty() ? "." : opt.out_dir) / "timing.csv", [&](std::ostream& os) { write_timing_csv(os, rows); });
  out << std::setprecision(4);
  out << "n     policy        mean_seconds    normalized\n";
  for (const TimingRow& r : rows) {
    out << std::left << std::setw(6) << r.n << std::setw(14) << r.policy << std::setw(16) << r.mean_time
        << r.normalized_time << '\n';
  }
  return kExitOk;
}

int cmd_validate(const Options& opt, std::ostream& out) {
  const std::vector<SuiteResult> results = run_validation(opt.only, opt.seed.value_or(20240601));
  bool all = true;
  for (const SuiteResult& r : results) {
    all = all && r.passed();
    out << (r.passed() ? "[PASS] " : "[FAIL] ") << r.name << "  checks=" << r.checks << "  time=" << std::fixed
        << std::setprecision(2) << r.seconds << "s\n";
    for (const std::string& f : r.failures) out << "       " << f << '\n';
  }
  return all ? kExitOk : kExitInvalid;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Power allocation for remote estimation with energy harvesting", "eh_allocate"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string only;

  auto* solve = app.add_subcommand("solve", "solve one instance and print the allocation as JSON");
  solve->add_option("--config", opt.config, "instance JSON file")->required();
  solve->add_option("--out", opt.out_dir, "also write solution.json into this directory");
  solve->add_option("--seed", seed, "seed for random model/channel/arrival components");
  solve->add_flag("--strict", opt.strict, "reject energy arriving at zero-variance slots");

  auto* experiment = app.add_subcommand("experiment", "Monte Carlo sweep over the arrival rate");
  experiment->add_option("--config", opt.config, "experiment JSON file (or a manifest.json)")->required();
  experiment->add_option("--out", opt.out_dir, "output directory");
  experiment->add_option("--seed", seed, "master seed override");
  experiment->add_option("--jobs", jobs, "worker threads (default: EH_ALLOCATE_JOBS or all cores)")->check(CLI::NonNegativeNumber);
  experiment->add_flag("--strict", opt.strict, "reject energy arriving at zero-variance slots");
  experiment->add_flag("--records", opt.records, "also write per-trial records to trials.jsonl");

  auto* bench = app.add_subcommand("bench", "mean allocation time per policy for growing n");
  bench->add_option("--config", opt.config, "timing JSON file (or an experiment file with a 'timing' object)");
  bench->add_option("--out", opt.out_dir, "output directory");
  bench->add_option("--seed", seed, "master seed override");

  auto* validate = app.add_subcommand("validate", "run the property suites");
  validate->add_option("--only", only, "run a single suite")
      ->check(CLI::IsMember(suite_names()));
  validate->add_option("--seed", seed, "seed of the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }
  for (CLI::App* sub : {solve, experiment, bench, validate}) {
    if (sub->count("--seed") > 0) opt.seed = seed;
  }
  if (experiment->count("--jobs") > 0) opt.jobs = jobs;
  if (!only.empty()) opt.only = only;

  try {
    if (*solve) return cmd_solve(opt, out);
    if (*experiment) return cmd_experiment(opt, out);
    if (*bench) return cmd_bench(opt, out);
    return cmd_validate(opt, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace ehalloc
