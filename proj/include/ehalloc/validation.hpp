#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ehalloc/estimator.hpp"
#include "ehalloc/rng.hpp"
#include "ehalloc/signal_model.hpp"

namespace ehalloc {

struct SuiteResult {
  std::string name;
  int checks = 0;
  std::vector<std::string> failures;  // each names the seed of its counterexample
  double seconds = 0.0;

  bool passed() const { return failures.empty(); }
};

/// signal-model, estimator, gradient, majorization, solver, policies, harness
const std::vector<std::string>& suite_names();

/// Throws InvalidConfig for an unknown suite.
SuiteResult run_suite(const std::string& name, std::uint64_t seed);
std::vector<SuiteResult> run_validation(const std::optional<std::string>& only, std::uint64_t seed);

// Random instance generators shared by the suites and the tests.

/// K = U_Ω diag(λ) U_Ω† with a Haar basis and λ drawn from [0.1, 2], scaled to P_x = n.
CovarianceModel random_model(int n, int s, Engine& gen);
/// Each slot receives a packet from [0, 2] with probability 1/2; never all zero.
Eigen::VectorXd random_arrivals(int n, Engine& gen);
/// Consumed-energy profile spending a random share of the battery each slot
/// and emptying it at the end; always feasible for `packets`.
Eigen::VectorXd random_feasible_profile(const Eigen::VectorXd& packets, Engine& gen);

}  // namespace ehalloc
