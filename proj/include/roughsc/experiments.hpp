#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roughsc/classical.hpp"
#include "roughsc/initial_data.hpp"
#include "roughsc/metrics.hpp"

namespace roughsc {

enum class ExperimentKind {
  HarmonicExact,
  WeakConvergence,
  L2MollifiedRate,
  ConcentrationSplit,
  RandomFamily,
  ConjectureProbe,
  BranchAtlas
};

std::string to_string(ExperimentKind kind);
/// Accepts snake_case ("weak_convergence") or the enum spelling ("WeakConvergence").
ExperimentKind experiment_from_string(const std::string& name);

struct GridSpec {
  Index n_points = 1024;
  double x_min = -8.0;
  double x_max = 8.0;
};

/// Common knobs plus experiment-specific `params` (see README for the keys).
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::HarmonicExact;
  std::vector<double> eps_ladder;
  double theta = 0.5;
  /// Overrides the per-eps grid choice when set.
  std::optional<GridSpec> grid;
  double T = 1.0;
  double dt = 1e-3;
  std::vector<double> eps_mollify;
  /// Reported only.
  double delta_growth = 0.1;
  std::uint64_t seed = 0;
  std::string output_dir;
  bool dump_grids = false;
  nlohmann::json params = nlohmann::json::object();

  /// Defaults for the experiment, ladders included.
  static ExperimentConfig defaults(ExperimentKind kind);
  /// Missing keys fall back to defaults(experiment). Unknown experiment or bad values
  /// raise ConfigurationError.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
  /// FNV-1a of the canonical JSON (output_dir and dump_grids excluded).
  std::string hash() const;

  /// params[key] or the fallback.
  template <class T>
  T param(const std::string& key, const T& fallback) const {
    return params.contains(key) ? params.at(key).get<T>() : fallback;
  }
};

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::string code_version;
  nlohmann::json config;
  nlohmann::json records = nlohmann::json::array();
  nlohmann::json summary = nlohmann::json::object();
  std::vector<Assertion> assertions;
  Warnings warnings;
  double wall_clock_seconds = 0.0;

  bool passed() const;
  nlohmann::json to_json() const;
};

std::string code_version();

/// Dispatches on cfg.experiment. Writes the manifest and CSV tables when
/// cfg.output_dir is non-empty.
RunManifest run_experiment(const ExperimentConfig& cfg);

RunManifest run_harmonic_exact(const ExperimentConfig& cfg);
RunManifest run_weak_convergence(const ExperimentConfig& cfg);
RunManifest run_l2_mollified_rate(const ExperimentConfig& cfg);
RunManifest run_concentration_split(const ExperimentConfig& cfg);
RunManifest run_random_family(const ExperimentConfig& cfg);
RunManifest run_conjecture_probe(const ExperimentConfig& cfg);
RunManifest run_branch_atlas(const ExperimentConfig& cfg);

/// True when every entry is strictly below its predecessor.
bool strictly_decreasing(const std::vector<double>& values);

/// Simple CSV table with a header row; numbers are written with 17 significant digits.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<double> row);
  void add_text(std::vector<std::string> row);
  void write(const std::filesystem::path& path) const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace roughsc
