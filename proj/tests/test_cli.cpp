#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ehalloc/cli.hpp"
#include "ehalloc/config.hpp"
#include "ehalloc/errors.hpp"
#include "ehalloc/signal_model.hpp"

using namespace ehalloc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "eh_allocate");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("eh_allocate_tests_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_json(const fs::path& dir, const std::string& name, const Json& doc) {
  const fs::path p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Json lowpass_instance(const std::string& policy) {
  return Json{{"model", {{"builder", "lowpass"}, {"n", 16}, {"s", 4}, {"P_x", 16}}},
              {"channel", {{"kind", "static"}}},
              {"arrivals", {{"E", {0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1}}}},
              {"sigma_w_sq", 0.001},
              {"policy", policy}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("solve prints the low-pass example") {
    const fs::path dir = scratch("solve");
    const Run eq = cli({"solve", "--config", write_json(dir, "eq.json", lowpass_instance("equidistant")).string()});
    REQUIRE(eq.code == kExitOk);
    const Json doc = Json::parse(eq.out);
    CHECK(doc.at("normalized_mse").get<double>() == doctest::Approx(9.99e-4).epsilon(0.01));
    CHECK(doc.at("feasible").get<bool>());

    const Run un = cli({"solve", "--config", write_json(dir, "un.json", lowpass_instance("upper-16")).string(), "--out",
                        (dir / "out").string()});
    REQUIRE(un.code == kExitOk);
    CHECK(Json::parse(un.out).at("normalized_mse").get<double>() == doctest::Approx(1.16e-3).epsilon(0.01));
    CHECK(fs::exists(dir / "out" / "solution.json"));

    const Run opt = cli({"solve", "--config", write_json(dir, "opt.json", lowpass_instance("optimal")).string()});
    REQUIRE(opt.code == kExitOk);
    const Json od = Json::parse(opt.out);
    CHECK(od.at("converged").get<bool>());
    CHECK(od.at("kkt_residual").get<double>() <= 1e-8);
    CHECK(od.at("multipliers").at("kappa").size() == 16);
  }

  TEST_CASE("zero arrivals exit with an infeasibility message") {
    const fs::path dir = scratch("zero");
    Json inst = lowpass_instance("optimal");
    inst["arrivals"] = Json{{"E", std::vector<double>(16, 0.0)}};
    const Run r = cli({"solve", "--config", write_json(dir, "zero.json", inst).string()});
    CHECK(r.code == kExitInvalid);
    CHECK(r.err.find("InfeasibleRegion") != std::string::npos);
  }

  TEST_CASE("bad configurations") {
    const fs::path dir = scratch("bad");
    Json extra = lowpass_instance("optimal");
    extra["colour"] = "blue";
    CHECK(cli({"solve", "--config", write_json(dir, "extra.json", extra).string()}).code == kExitInvalid);
    Json policy = lowpass_instance("fastest");
    CHECK(cli({"solve", "--config", write_json(dir, "policy.json", policy).string()}).code == kExitInvalid);
    std::ofstream(dir / "broken.json") << "{ not json";
    const Run broken = cli({"solve", "--config", (dir / "broken.json").string()});
    CHECK(broken.code == kExitInvalid);
    CHECK(broken.err.find("InvalidConfig") != std::string::npos);
    CHECK(cli({"solve", "--config", (dir / "missing.json").string()}).code == kExitInvalid);
    CHECK(cli({"frobnicate"}).code == kExitInvalid);
    CHECK(cli({}).code == kExitInvalid);
  }

  TEST_CASE("model JSON round trip") {
    const CovarianceModel m = random_haar_covariance(5, Eigen::Vector3d(2, 1, 0.25), 8);
    const CovarianceModel back = model_from_json(Json::parse(model_to_json(m).dump()));
    CHECK((back.K() - m.K()).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("experiment outputs and manifest rerun") {
    const fs::path dir = scratch("experiment");
    const Json config{{"n", 8}, {"s", 2}, {"p_grid", {0.3, 0.8}}, {"trials", 4}, {"master_seed", 5},
                      {"policies", {"optimal", "greedy", "upper-n"}}};
    const Run first = cli({"experiment", "--config", write_json(dir, "exp.json", config).string(), "--out",
                           (dir / "a").string(), "--jobs", "2", "--records"});
    REQUIRE(first.code == kExitOk);
    for (const char* f : {"curves.csv", "gaps.csv", "timing.csv", "manifest.json", "trials.jsonl"}) {
      CHECK(fs::exists(dir / "a" / f));
    }
    const Run again = cli({"experiment", "--config", (dir / "a" / "manifest.json").string(), "--out",
                           (dir / "b").string(), "--jobs", "1"});
    REQUIRE(again.code == kExitOk);
    CHECK(slurp(dir / "a" / "curves.csv") == slurp(dir / "b" / "curves.csv"));
    CHECK(slurp(dir / "a" / "gaps.csv") == slurp(dir / "b" / "gaps.csv"));
    CHECK(Json::parse(slurp(dir / "a" / "manifest.json")).at("master_seed").get<std::uint64_t>() == 5);
  }

  TEST_CASE("p = 0 gives the prior error for every policy") {
    const fs::path dir = scratch("p0");
    const Json config{{"n", 8}, {"s", 2}, {"p_grid", {0.0}}, {"trials", 3}};
    REQUIRE(cli({"experiment", "--config", write_json(dir, "p0.json", config).string(), "--out", dir.string()}).code ==
            kExitOk);
    std::istringstream curves(slurp(dir / "curves.csv"));
    std::string line;
    std::getline(curves, line);
    int rows = 0;
    while (std::getline(curves, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      REQUIRE(cells.size() >= 3);
      CHECK(std::stod(cells[2]) == 1.0);
      ++rows;
    }
    CHECK(rows == 4);
  }

  TEST_CASE("validate selects suites") {
    const Run one = cli({"validate", "--only", "majorization"});
    CHECK(one.code == kExitOk);
    CHECK(one.out.find("majorization") != std::string::npos);
    CHECK(one.out.find("estimator") == std::string::npos);
    CHECK(cli({"validate", "--only", "nonsense"}).code == kExitInvalid);
  }
}
