#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "ehalloc/energy.hpp"
#include "ehalloc/estimator.hpp"
#include "ehalloc/harness.hpp"
#include "ehalloc/policies.hpp"
#include "ehalloc/signal_model.hpp"

namespace ehalloc {

using Json = nlohmann::json;

/// {"n": int, "re": [[...]], "im": [[...]]}
Json model_to_json(const CovarianceModel& model);
CovarianceModel model_from_json(const Json& j);

/// Builds a covariance from a named builder:
///   static-correlation {n, rho, P_x}     lowpass {n, s, P_x}
///   circulant {re, im}  (first row)      rank-one {re, im, P_x}
///   haar {n, lambda | s + profile, seed} white {n, P_x}
///   almost-white {n, index, epsilon, P_x} matrix {n, re, im}
CovarianceModel build_model_from_json(const Json& j, std::optional<std::uint64_t> seed_override = std::nullopt);

/// One allocation problem as read by `eh_allocate solve`.
struct Instance {
  CovarianceModel model;
  SpectrumDecomposition spectrum;
  ChannelTrace channel;
  EnergyTrace energy;
  NoiseModel noise;
  PolicySpec policy;
};

Instance instance_from_json(const Json& j, std::optional<std::uint64_t> seed_override = std::nullopt);

ExperimentConfig experiment_from_json(const Json& j);
Json experiment_to_json(const ExperimentConfig& config);

TimingConfig timing_from_json(const Json& j);
Json timing_to_json(const TimingConfig& config);

/// Reads and parses a JSON file; failures become InvalidConfig.
Json read_json_file(const std::string& path);

}  // namespace ehalloc
