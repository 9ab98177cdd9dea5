#include "ehalloc/config.hpp"

#include <fstream>
#include <set>

#include "ehalloc/errors.hpp"
#include "ehalloc/rng.hpp"

namespace ehalloc {

namespace {

void only_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::InvalidConfig, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail(ErrorKind::InvalidConfig, "unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T need(const Json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorKind::InvalidConfig, where + " is missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidConfig, where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const std::string& key, T fallback, const std::string& where) {
  return j.contains(key) ? need<T>(j, key, where) : fallback;
}

Eigen::VectorXd vector_of(const Json& j, const std::string& key, const std::string& where) {
  const auto v = need<std::vector<double>>(j, key, where);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXcd complex_vector(const Json& j, const std::string& where) {
  const Eigen::VectorXd re = vector_of(j, "re", where);
  const Eigen::VectorXd im = j.contains("im") ? vector_of(j, "im", where) : Eigen::VectorXd::Zero(re.size());
  if (re.size() != im.size()) fail(ErrorKind::InvalidConfig, where + ": re and im differ in length");
  Eigen::VectorXcd v(re.size());
  for (Eigen::Index i = 0; i < re.size(); ++i) v(i) = cplx(re(i), im(i));
  return v;
}

std::uint64_t seed_for(const Json& j, std::optional<std::uint64_t> override_seed, Stream stream,
                       const std::string& where) {
  if (override_seed) return derive_seed(*override_seed, static_cast<std::uint64_t>(stream));
  return need<std::uint64_t>(j, "seed", where);
}

EigenProfile profile_from(const std::string& s) {
  if (s == "geometric") return EigenProfile::Geometric;
  if (s == "flat") return EigenProfile::Flat;
  fail(ErrorKind::InvalidConfig, "eigen_profile must be 'geometric' or 'flat', got '" + s + "'");
}

std::string profile_name(EigenProfile p) { return p == EigenProfile::Geometric ? "geometric" : "flat"; }

PolicySpec policy_from(const Json& j) {
  if (j.is_string()) return PolicySpec::parse(j.get<std::string>());
  only_keys(j, {"id", "t_d"}, "policy");
  PolicySpec spec = PolicySpec::parse(need<std::string>(j, "id", "policy"));
  if (j.contains("t_d")) spec.delay = need<int>(j, "t_d", "policy");
  return spec;
}

Json policy_to(const PolicySpec& spec) {
  if (!spec.delay) return spec.name();
  return Json{{"id", spec.name()}, {"t_d", *spec.delay}};
}

}  // namespace

Json model_to_json(const CovarianceModel& model) {
  const int n = model.n();
  Json re = Json::array(), im = Json::array();
  for (int i = 0; i < n; ++i) {
    Json rr = Json::array(), ri = Json::array();
    for (int k = 0; k < n; ++k) {
      rr.push_back(model.K()(i, k).real());
      ri.push_back(model.K()(i, k).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return Json{{"n", n}, {"re", re}, {"im", im}};
}

CovarianceModel model_from_json(const Json& j) {
  const std::string where = "model";
  const int n = need<int>(j, "n", where);
  if (n < 1) fail(ErrorKind::InvalidConfig, "model.n must be positive");
  const auto re = need<std::vector<std::vector<double>>>(j, "re", where);
  const auto im = j.contains("im") ? need<std::vector<std::vector<double>>>(j, "im", where)
                                   : std::vector<std::vector<double>>(static_cast<size_t>(n),
                                                                      std::vector<double>(static_cast<size_t>(n), 0.0));
  if (re.size() != static_cast<size_t>(n) || im.size() != static_cast<size_t>(n)) {
    fail(ErrorKind::DimensionMismatch, "model matrix must have n rows");
  }
  Eigen::MatrixXcd K(n, n);
  for (int i = 0; i < n; ++i) {
    if (re[static_cast<size_t>(i)].size() != static_cast<size_t>(n) ||
        im[static_cast<size_t>(i)].size() != static_cast<size_t>(n)) {
      fail(ErrorKind::DimensionMismatch, "model matrix must have n columns");
    }
    for (int k = 0; k < n; ++k) {
      K(i, k) = cplx(re[static_cast<size_t>(i)][static_cast<size_t>(k)], im[static_cast<size_t>(i)][static_cast<size_t>(k)]);
    }
  }
  return CovarianceModel(K);
}

CovarianceModel build_model_from_json(const Json& j, std::optional<std::uint64_t> seed_override) {
  const std::string where = "model";
  const std::string builder = need<std::string>(j, "builder", where);
  if (builder == "static-correlation") {
    only_keys(j, {"builder", "n", "rho", "P_x"}, where);
    return build_static_correlation(need<int>(j, "n", where), need<double>(j, "rho", where), need<double>(j, "P_x", where));
  }
  if (builder == "lowpass") {
    only_keys(j, {"builder", "n", "s", "P_x"}, where);
    return build_lowpass_cwss(need<int>(j, "n", where), need<int>(j, "s", where), need<double>(j, "P_x", where));
  }
  if (builder == "circulant") {
    only_keys(j, {"builder", "re", "im"}, where);
    return build_circulant(complex_vector(j, where)).model;
  }
  if (builder == "rank-one") {
    only_keys(j, {"builder", "re", "im", "P_x"}, where);
    return build_rank_one(complex_vector(j, where), need<double>(j, "P_x", where));
  }
  if (builder == "white") {
    only_keys(j, {"builder", "n", "P_x"}, where);
    return build_white(need<int>(j, "n", where), need<double>(j, "P_x", where));
  }
  if (builder == "almost-white") {
    only_keys(j, {"builder", "n", "index", "epsilon", "P_x"}, where);
    const int n = need<int>(j, "n", where);
    const int index = need<int>(j, "index", where);
    const double eps = need<double>(j, "epsilon", where);
    const double P = get_or<double>(j, "P_x", n, where);
    if (n < 1 || index < 0 || index >= n) fail(ErrorKind::InvalidConfig, "almost-white index out of range");
    if (!(eps > 0.0 && eps < 1.0)) fail(ErrorKind::InvalidConfig, "almost-white epsilon must lie in (0, 1)");
    Eigen::VectorXd z = Eigen::VectorXd::Ones(n);
    z(index) = 1.0 - eps;
    return circulant_from_spectrum(z * (P / z.sum()));
  }
  if (builder == "haar") {
    only_keys(j, {"builder", "n", "lambda", "s", "profile", "ratio", "P_x", "seed"}, where);
    const int n = need<int>(j, "n", where);
    Eigen::VectorXd lambda;
    if (j.contains("lambda")) {
      lambda = vector_of(j, "lambda", where);
    } else {
      ExperimentConfig shape;
      shape.n = n;
      shape.s = need<int>(j, "s", where);
      shape.total_power = get_or<double>(j, "P_x", n, where);
      shape.eigen_profile = profile_from(get_or<std::string>(j, "profile", "geometric", where));
      shape.geometric_ratio = get_or<double>(j, "ratio", 0.7, where);
      if (shape.s < 1 || shape.s > n) fail(ErrorKind::RankError, "haar model needs 1 <= s <= n");
      lambda = shape.eigenvalues();
    }
    return random_haar_covariance(n, lambda, seed_for(j, seed_override, Stream::Unitary, where));
  }
  if (builder == "matrix") {
    only_keys(j, {"builder", "n", "re", "im"}, where);
    return model_from_json(j);
  }
  fail(ErrorKind::InvalidConfig, "unknown model builder '" + builder + "'");
}

Instance instance_from_json(const Json& j, std::optional<std::uint64_t> seed_override) {
  only_keys(j, {"model", "channel", "arrivals", "sigma_w_sq", "policy", "t_d"}, "instance");
  if (!j.contains("model")) fail(ErrorKind::InvalidConfig, "instance is missing 'model'");
  CovarianceModel model = build_model_from_json(j.at("model"), seed_override);
  const int n = model.n();

  ChannelTrace channel = ChannelTrace::unit(n);
  if (j.contains("channel")) {
    const Json& c = j.at("channel");
    if (c.contains("re")) {
      only_keys(c, {"re", "im"}, "channel");
      channel = ChannelTrace(complex_vector(c, "channel"));
    } else {
      only_keys(c, {"kind", "seed"}, "channel");
      const std::string kind = need<std::string>(c, "kind", "channel");
      if (kind == "rayleigh") channel = sample_rayleigh_channel(n, seed_for(c, seed_override, Stream::Channel, "channel"));
      else if (kind != "static") fail(ErrorKind::InvalidConfig, "channel kind must be 'static' or 'rayleigh'");
    }
  }
  if (channel.n() != n) fail(ErrorKind::DimensionMismatch, "channel length differs from model");

  if (!j.contains("arrivals")) fail(ErrorKind::InvalidConfig, "instance is missing 'arrivals'");
  const Json& a = j.at("arrivals");
  std::optional<EnergyTrace> energy;
  if (a.is_array()) {
    energy.emplace(Eigen::Map<const Eigen::VectorXd>(a.get<std::vector<double>>().data(), static_cast<Eigen::Index>(a.size())));
  } else if (a.contains("E")) {
    only_keys(a, {"E"}, "arrivals");
    energy.emplace(vector_of(a, "E", "arrivals"));
  } else {
    only_keys(a, {"kind", "p", "E0", "seed"}, "arrivals");
    if (need<std::string>(a, "kind", "arrivals") != "bernoulli") {
      fail(ErrorKind::InvalidConfig, "arrivals kind must be 'bernoulli' (or give E explicitly)");
    }
    energy.emplace(sample_bernoulli_arrivals(need<double>(a, "p", "arrivals"), n, get_or<double>(a, "E0", 1.0, "arrivals"),
                                             seed_for(a, seed_override, Stream::Arrivals, "arrivals")));
  }
  if (energy->n() != n) fail(ErrorKind::DimensionMismatch, "arrival trace length differs from model");

  PolicySpec policy = PolicySpec::parse(get_or<std::string>(j, "policy", "optimal", "instance"));
  if (j.contains("t_d")) policy.delay = need<int>(j, "t_d", "instance");
  const NoiseModel noise(need<double>(j, "sigma_w_sq", "instance"));
  SpectrumDecomposition spectrum = reduced_evd(model);
  return Instance{std::move(model), std::move(spectrum), std::move(channel), std::move(*energy), noise, policy};
}

ExperimentConfig experiment_from_json(const Json& j) {
  const std::string where = "experiment";
  only_keys(j, {"n", "s", "P_x", "sigma_w_sq", "eigen_profile", "geometric_ratio", "unitary", "unitary_mode",
                "haar_seed", "p_grid", "E0", "channel", "policies", "trials", "master_seed", "strict", "timing"},
            where);
  ExperimentConfig c;
  c.n = get_or<int>(j, "n", c.n, where);
  c.s = get_or<int>(j, "s", c.s, where);
  c.total_power = get_or<double>(j, "P_x", static_cast<double>(c.n), where);
  c.sigma_w_sq = get_or<double>(j, "sigma_w_sq", c.sigma_w_sq, where);
  c.eigen_profile = profile_from(get_or<std::string>(j, "eigen_profile", "geometric", where));
  c.geometric_ratio = get_or<double>(j, "geometric_ratio", c.geometric_ratio, where);
  const std::string unitary = get_or<std::string>(j, "unitary", "haar", where);
  if (unitary == "haar") c.unitary = UnitaryKind::Haar;
  else if (unitary == "dft") c.unitary = UnitaryKind::Dft;
  else fail(ErrorKind::InvalidConfig, "unitary must be 'haar' or 'dft'");
  const std::string mode = get_or<std::string>(j, "unitary_mode", "fixed", where);
  if (mode == "fixed") c.unitary_mode = UnitaryMode::Fixed;
  else if (mode == "per-trial") c.unitary_mode = UnitaryMode::PerTrial;
  else fail(ErrorKind::InvalidConfig, "unitary_mode must be 'fixed' or 'per-trial'");
  c.haar_seed = get_or<std::uint64_t>(j, "haar_seed", c.haar_seed, where);
  c.p_grid = get_or<std::vector<double>>(j, "p_grid", c.p_grid, where);
  c.E0 = get_or<double>(j, "E0", c.E0, where);
  const std::string channel = get_or<std::string>(j, "channel", "rayleigh", where);
  if (channel == "rayleigh") c.channel = ChannelKind::Rayleigh;
  else if (channel == "static") c.channel = ChannelKind::Static;
  else fail(ErrorKind::InvalidConfig, "channel must be 'rayleigh' or 'static'");
  if (j.contains("policies")) {
    if (!j.at("policies").is_array()) fail(ErrorKind::InvalidConfig, "policies must be an array");
    for (const Json& p : j.at("policies")) c.policies.push_back(policy_from(p));
  } else {
    for (const char* id : {"optimal", "relaxed", "greedy", "upper-n"}) c.policies.push_back(PolicySpec::parse(id));
  }
  c.trials = get_or<int>(j, "trials", c.trials, where);
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", c.master_seed, where);
  c.strict = get_or<bool>(j, "strict", false, where);
  c.validate();
  return c;
}

Json experiment_to_json(const ExperimentConfig& c) {
  Json policies = Json::array();
  for (const PolicySpec& p : c.policies) policies.push_back(policy_to(p));
  return Json{{"n", c.n},
              {"s", c.s},
              {"P_x", c.total_power},
              {"sigma_w_sq", c.sigma_w_sq},
              {"eigen_profile", profile_name(c.eigen_profile)},
              {"geometric_ratio", c.geometric_ratio},
              {"unitary", c.unitary == UnitaryKind::Haar ? "haar" : "dft"},
              {"unitary_mode", c.unitary_mode == UnitaryMode::Fixed ? "fixed" : "per-trial"},
              {"haar_seed", c.haar_seed},
              {"p_grid", c.p_grid},
              {"E0", c.E0},
              {"channel", c.channel == ChannelKind::Rayleigh ? "rayleigh" : "static"},
              {"policies", policies},
              {"trials", c.trials},
              {"master_seed", c.master_seed},
              {"strict", c.strict}};
}

TimingConfig timing_from_json(const Json& j) {
  const std::string where = "timing";
  only_keys(j, {"sizes", "p", "trials", "sigma_w_sq", "E0", "eigen_profile", "master_seed", "policies"}, where);
  TimingConfig c;
  c.sizes = get_or<std::vector<int>>(j, "sizes", c.sizes, where);
  c.p = get_or<double>(j, "p", c.p, where);
  c.trials = get_or<int>(j, "trials", c.trials, where);
  c.sigma_w_sq = get_or<double>(j, "sigma_w_sq", c.sigma_w_sq, where);
  c.E0 = get_or<double>(j, "E0", c.E0, where);
  c.eigen_profile = profile_from(get_or<std::string>(j, "eigen_profile", "geometric", where));
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", c.master_seed, where);
  if (j.contains("policies")) {
    for (const Json& p : j.at("policies")) c.policies.push_back(policy_from(p));
  }
  if (c.sizes.empty()) fail(ErrorKind::InvalidConfig, "timing.sizes is empty");
  for (int n : c.sizes) {
    if (n < 1) fail(ErrorKind::InvalidConfig, "timing sizes must be positive");
  }
  if (!(c.p > 0.0 && c.p <= 1.0)) fail(ErrorKind::InvalidConfig, "timing.p must lie in (0, 1]");
  if (c.trials < 1) fail(ErrorKind::InvalidConfig, "timing.trials must be at least 1");
  if (!(c.sigma_w_sq > 0.0)) fail(ErrorKind::InvalidConfig, "timing.sigma_w_sq must be positive");
  return c;
}

Json timing_to_json(const TimingConfig& c) {
  Json policies = Json::array();
  for (const PolicySpec& p : c.policies) policies.push_back(policy_to(p));
  return Json{{"sizes", c.sizes},     {"p", c.p},   {"trials", c.trials},
              {"sigma_w_sq", c.sigma_w_sq}, {"E0", c.E0}, {"eigen_profile", profile_name(c.eigen_profile)},
              {"master_seed", c.master_seed}, {"policies", policies}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidConfig, "cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidConfig, "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace ehalloc
