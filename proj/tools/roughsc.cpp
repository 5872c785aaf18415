#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "roughsc/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace roughsc;

namespace {

constexpr int kPass = 0;
constexpr int kAssertionFailure = 1;
constexpr int kConfigError = 2;

struct CommonOptions {
  std::string experiment;
  std::string config_path;
  std::vector<double> eps;
  std::string out;
  bool dump_grids = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> theta;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool positional_experiment) {
  if (positional_experiment) {
    cmd->add_option("experiment", o.experiment, "experiment name (snake_case or CamelCase)")->required();
  }
  cmd->add_option("--config,-c", o.config_path, "JSON configuration file");
  cmd->add_option("--eps", o.eps, "override the eps ladder (strictly decreasing)");
  cmd->add_option("--out,-o", o.out, "output directory");
  cmd->add_flag("--dump-grids", o.dump_grids, "write binary grid snapshots");
  cmd->add_option("--seed", o.seed, "override the seed");
  cmd->add_option("--theta", o.theta, "override theta");
}

ExperimentConfig load_config(const CommonOptions& o) {
  json j = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigurationError("cannot open config " + o.config_path);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigurationError("config " + o.config_path + ": " + e.what());
    }
  }
  if (!o.experiment.empty()) {
    if (j.contains("experiment") &&
        experiment_from_string(j.at("experiment").get<std::string>()) != experiment_from_string(o.experiment)) {
      throw ConfigurationError("config names experiment '" + j.at("experiment").get<std::string>() +
                               "' but '" + o.experiment + "' was requested");
    }
    j["experiment"] = o.experiment;
  }
  if (!o.eps.empty()) j["eps_ladder"] = o.eps;
  if (o.seed) j["seed"] = *o.seed;
  if (o.theta) j["theta"] = *o.theta;
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.dump_grids) cfg.dump_grids = true;
  return cfg;
}

int report(const RunManifest& m) {
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& a : m.assertions) {
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << " [" << a.detail << "]\n";
  }
  std::cout << m.experiment << " config " << m.config_hash << " in " << m.wall_clock_seconds << " s: "
            << (m.passed() ? "passed" : "FAILED") << '\n';
  return m.passed() ? kPass : kAssertionFailure;
}

/// One run per (seed, theta) point in parallel workers; results keyed by point.
int sweep(const CommonOptions& o, const std::vector<std::uint64_t>& seeds, const std::vector<double>& thetas,
          unsigned jobs) {
  const ExperimentConfig base = load_config(o);
  struct Point {
    std::uint64_t seed;
    double theta;
  };
  std::vector<Point> points;
  for (auto s : seeds.empty() ? std::vector<std::uint64_t>{base.seed} : seeds) {
    for (double t : thetas.empty() ? std::vector<double>{base.theta} : thetas) points.push_back({s, t});
  }
  std::vector<ExperimentConfig> configs;
  for (const auto& p : points) {
    ExperimentConfig c = base;
    c.seed = p.seed;
    c.theta = p.theta;
    c.validate();
    if (!base.output_dir.empty()) {
      std::ostringstream name;
      name << "seed_" << p.seed << "_theta_" << p.theta;
      c.output_dir = (fs::path(base.output_dir) / name.str()).string();
    }
    configs.push_back(std::move(c));
  }
  std::vector<std::optional<RunManifest>> results(configs.size());
  std::vector<std::string> errors(configs.size());
  std::size_t next = 0;
  std::mutex lock;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> g(lock);
        if (next >= configs.size()) return;
        i = next++;
      }
      try {
        results[i] = run_experiment(configs[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < std::max(1u, jobs); ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int code = kPass;
  CsvTable summary({"seed", "theta", "config_hash", "passed", "error"});
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::ostringstream seed;
    seed << points[i].seed;
    std::ostringstream theta;
    theta.precision(17);
    theta << points[i].theta;
    if (results[i]) {
      std::cout << "[seed " << seed.str() << ", theta " << theta.str() << "]\n";
      if (report(*results[i]) != kPass) code = std::max(code, kAssertionFailure);
      summary.add_text({seed.str(), theta.str(), results[i]->config_hash, results[i]->passed() ? "1" : "0", ""});
    } else {
      std::cerr << "error at seed " << seed.str() << ", theta " << theta.str() << ": " << errors[i] << '\n';
      code = kConfigError;
      summary.add_text({seed.str(), theta.str(), configs[i].hash(), "0", errors[i]});
    }
  }
  if (!base.output_dir.empty()) {
    fs::create_directories(base.output_dir);
    summary.write(fs::path(base.output_dir) / "sweep.csv");
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical limits with rough potentials: experiments and probes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "run one named experiment");
  add_common(run, run_opts, true);

  CommonOptions sweep_opts;
  std::vector<std::uint64_t> seeds;
  std::vector<double> thetas;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sw = app.add_subcommand("sweep", "run an experiment over seeds and theta values in parallel");
  add_common(sw, sweep_opts, true);
  sw->add_option("--seeds", seeds, "seed list");
  sw->add_option("--thetas", thetas, "theta list");
  sw->add_option("--jobs,-j", jobs, "worker threads");

  CommonOptions probe_opts;
  auto* probe = app.add_subcommand("probe", "shorthand for 'run conjecture_probe'");
  add_common(probe, probe_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kConfigError;
  }

  try {
    if (*run) return report(run_experiment(load_config(run_opts)));
    if (*probe) {
      probe_opts.experiment = "conjecture_probe";
      return report(run_experiment(load_config(probe_opts)));
    }
    return sweep(sweep_opts, seeds, thetas, jobs);
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ShapeError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kAssertionFailure;
  }
}
