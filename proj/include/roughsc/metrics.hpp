#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "roughsc/phase_space.hpp"

namespace roughsc {

/// d(mu, nu) = int |mu^(xi,eta) - nu^(xi,eta)| exp(-(xi^2+eta^2)/(2 sigma^2)) dxi deta
/// over [-cutoff, cutoff]^2, trapezoid rule on `nodes` x `nodes` frequencies.
struct WeakMetricConfig {
  double frequency_cutoff = 8.0;
  double gaussian_weight_sigma = 1.0;
  Index nodes = 65;

  void validate() const;
  RealVector frequencies() const;
  /// Trapezoid integral of the weight alone; the metric is at most twice this.
  double weight_mass() const;
};

/// Characteristic function of a probability measure on the metric's frequency grid.
/// Entry (a, b) is at (xi[a], eta[b]); `raw_mass` is the mass before normalization.
struct CharacteristicSamples {
  Eigen::MatrixXcd values;
  double raw_mass = 1.0;
};

CharacteristicSamples characteristic(const PhaseSpaceDensity& mu, const WeakMetricConfig& cfg = {});
/// Wigner (or Husimi when `husimi`) characteristic function of a quantum ensemble.
CharacteristicSamples characteristic(const DensityEnsemble& ensemble, bool husimi, const WeakMetricConfig& cfg = {});

double weak_distance(const CharacteristicSamples& mu, const CharacteristicSamples& nu,
                     const WeakMetricConfig& cfg = {});
double weak_distance(const PhaseSpaceDensity& mu, const PhaseSpaceDensity& nu, const WeakMetricConfig& cfg = {});

/// sqrt(dx dp sum (a - b)^2) for grid densities on one phase grid.
double l2_distance(const PhaseSpaceDensity& a, const PhaseSpaceDensity& b);

struct RateFit {
  std::vector<double> eps_values;
  std::vector<double> distances;
  /// slope of log(distance) against log(eps); positive means convergence
  double fitted_slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Non-positive distances are dropped with a warning; fewer than 3 survivors is an error.
RateFit fit_rate(const std::vector<double>& eps_values, const std::vector<double>& distances,
                 Warnings* warnings = nullptr);

nlohmann::json to_json(const RateFit& fit);
RateFit rate_fit_from_json(const nlohmann::json& j);

void write_ladder_csv(const std::filesystem::path& path, const std::vector<double>& eps_values,
                      const std::vector<double>& distances);

}  // namespace roughsc
