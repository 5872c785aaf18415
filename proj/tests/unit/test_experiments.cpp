#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "roughsc/experiments.hpp"

using namespace roughsc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("roughsc_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("experiment names") {
  CHECK(experiment_from_string("weak_convergence") == ExperimentKind::WeakConvergence);
  CHECK(experiment_from_string("WeakConvergence") == ExperimentKind::WeakConvergence);
  CHECK(experiment_from_string("probe") == ExperimentKind::ConjectureProbe);
  CHECK(to_string(ExperimentKind::BranchAtlas) == "branch_atlas");
  CHECK_THROWS_AS(experiment_from_string("nope"), ConfigurationError);
}

TEST_CASE("config parsing and validation") {
  const ExperimentConfig c = ExperimentConfig::from_json(json::parse(R"({"experiment":"harmonic_exact"})"));
  CHECK(c.eps_ladder == std::vector<double>{0.05});
  REQUIRE(c.grid.has_value());
  CHECK(c.grid->n_points == 1024);

  const ExperimentConfig rf = ExperimentConfig::defaults(ExperimentKind::RandomFamily);
  CHECK(rf.eps_ladder.size() == 4);

  auto bad = [](const char* text) { return ExperimentConfig::from_json(json::parse(text)); };
  CHECK_THROWS_AS(bad(R"({"eps_ladder":[0.1]})"), ConfigurationError);
  CHECK_THROWS_AS(bad(R"({"experiment":"weak_convergence","eps_ladder":[0.1,0.2]})"), ConfigurationError);
  CHECK_THROWS_AS(bad(R"({"experiment":"weak_convergence","eps_ladder":[1.5]})"), ConfigurationError);
  CHECK_THROWS_AS(bad(R"({"experiment":"weak_convergence","dt":-1})"), ConfigurationError);
  CHECK_THROWS_AS(bad(R"({"experiment":"weak_convergence","eps_ladder":"x"})"), ConfigurationError);
  CHECK_THROWS_AS(bad(R"({"experiment":"weak_convergence","grid":{"n_points":100,"x_min":-1,"x_max":1}})"),
                  ConfigurationError);
  CHECK_THROWS_AS(bad(R"([1,2])"), ConfigurationError);
}

TEST_CASE("config hash") {
  ExperimentConfig a = ExperimentConfig::defaults(ExperimentKind::WeakConvergence);
  ExperimentConfig b = a;
  b.output_dir = "/somewhere/else";
  b.dump_grids = true;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.seed = 7;
  CHECK(a.hash() != b.hash());
  const ExperimentConfig back = ExperimentConfig::from_json(a.to_json());
  CHECK(back.hash() == a.hash());
}

TEST_CASE("strictly decreasing") {
  CHECK(strictly_decreasing({3.0, 2.0, 1.0}));
  CHECK(strictly_decreasing({1.0}));
  CHECK_FALSE(strictly_decreasing({3.0, 3.0, 1.0}));
  CHECK_FALSE(strictly_decreasing({1.0, 2.0}));
}

TEST_CASE("csv table") {
  const fs::path d = scratch_dir("csv");
  fs::create_directories(d);
  CsvTable t({"eps", "distance"});
  t.add({0.1, 0.25});
  t.add({0.05, 1.0 / 3.0});
  CHECK(t.size() == 2);
  t.write(d / "t.csv");
  CHECK(slurp(d / "t.csv") == "eps,distance\n0.10000000000000001,0.25\n0.050000000000000003,0.33333333333333331\n");
  fs::remove_all(d);
}

TEST_CASE("branch atlas enumerates seven branches per theta and refuses theta near one") {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::BranchAtlas);
  c.params = {{"thetas", {0.3, 0.5}}};
  const RunManifest m = run_branch_atlas(c);
  CHECK(m.passed());
  CHECK(m.records.size() == 14);
  CHECK(m.summary.at("branches") == 14);
  int rest = 0;
  for (const auto& r : m.records) rest += r.at("sign") == "rest";
  CHECK(rest == 2);
  c.params = {{"thetas", {0.96}}};
  CHECK_THROWS_AS(run_branch_atlas(c), ConfigurationError);
}

TEST_CASE("harmonic exactness run writes its outputs") {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::HarmonicExact);
  const fs::path d = scratch_dir("harmonic");
  c.output_dir = d.string();
  const RunManifest m = run_experiment(c);
  CHECK(m.passed());
  CHECK(m.records.at(0).at("final_error").get<double>() < 1e-4);
  CHECK(fs::exists(d / "manifest.json"));
  CHECK(fs::exists(d / "harmonic_error.csv"));
  const json doc = json::parse(slurp(d / "manifest.json"));
  CHECK(doc.at("config_hash") == c.hash());
  CHECK(doc.at("code_version") == code_version());
  fs::remove_all(d);
}

TEST_CASE("probe row for a pure coherent state") {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::ConjectureProbe);
  c.eps_ladder = {0.1};
  const RunManifest m = run_conjecture_probe(c);
  REQUIRE(m.records.size() == 1);
  CHECK(m.records[0].at("sup_times_eps").get<double>() ==
        doctest::Approx(1.0 / (5.0 * std::numbers::pi)).epsilon(1e-6));
  CHECK(m.records[0].at("members") == 1);
  c.params = {{"family", "unknown"}};
  CHECK_THROWS_AS(run_conjecture_probe(c), ConfigurationError);
}

TEST_CASE("random family reruns are byte-identical") {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::RandomFamily);
  c.eps_ladder = {0.2, 0.1};
  c.T = 0.25;
  c.dt = 5e-3;
  c.seed = 3;
  c.params = {{"samples", 4}, {"time_samples", 2}};
  const fs::path a = scratch_dir("rf_a");
  const fs::path b = scratch_dir("rf_b");
  c.output_dir = a.string();
  const RunManifest ma = run_experiment(c);
  c.output_dir = b.string();
  run_experiment(c);
  for (const char* f : {"random_family.csv", "random_ladder.csv", "family.json"}) {
    CHECK(!slurp(a / f).empty());
    CHECK(slurp(a / f) == slurp(b / f));
  }
  for (const auto& r : ma.records) CHECK(r.at("operator_bound_ratio").get<double>() > 0.0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("shipped configs parse") {
  int count = 0;
  for (const auto& e : fs::directory_iterator(ROUGHSC_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    const ExperimentConfig c = ExperimentConfig::from_json(json::parse(slurp(e.path())));
    CHECK(ExperimentConfig::from_json(c.to_json()).hash() == c.hash());
    ++count;
  }
  CHECK(count >= 7);
}
