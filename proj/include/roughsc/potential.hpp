#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "roughsc/spectral_grid.hpp"

namespace roughsc {

/// V(x) = x^2/2.
struct Harmonic {};

/// V(x) = -|x|^{1+theta} on |x| <= core_radius, continued C^1 by
/// -r^{1+theta} - (1+theta) r^theta s + quartic * s^4 with s = |x| - r.
struct RoughPower {
  double theta = 0.5;
  double core_radius = 1.0;
  double quartic = 1.0;
};

/// User-supplied potential. An empty gradient falls back to central differences.
struct Custom {
  std::string label;
  std::function<double(double)> value;
  std::function<double(double)> gradient;
};

class PotentialSpec {
 public:
  using Kind = std::variant<Harmonic, RoughPower, Custom>;

  explicit PotentialSpec(Kind kind);

  static PotentialSpec harmonic();
  static PotentialSpec rough_power(double theta, double core_radius = 1.0, double quartic = 1.0);
  static PotentialSpec custom(std::string label, std::function<double(double)> value,
                              std::function<double(double)> gradient = {});
  static PotentialSpec zero();
  static PotentialSpec constant(double c);
  /// amplitude * exp(-(x/width)^2)
  static PotentialSpec gaussian(double amplitude, double width);
  /// a*x^2/2 + b*x^4/4, smooth and confining for b > 0.
  static PotentialSpec anharmonic(double a, double b);
  /// Linear interpolation of samples, clamped outside the grid.
  static PotentialSpec from_samples(const PositionGrid& grid, RealVector samples, std::string label);

  const Kind& kind() const { return kind_; }
  double value(double x) const;
  /// dV/dx; the rough core uses V'(0) = 0.
  double gradient(double x) const;
  /// Declared exact power-law core [-r, r] (RoughPower only).
  std::optional<std::pair<double, double>> core_interval() const;
  /// Human-readable parameters, stable across runs.
  std::string describe() const;
  /// 64-bit FNV-1a of describe(), hex encoded.
  std::string hash() const;

 private:
  Kind kind_;
};

/// Pointwise samples on the grid nodes. Throws if a declared core does not fit.
RealVector evaluate(const PotentialSpec& pot, const PositionGrid& grid);
RealVector evaluate_gradient(const PotentialSpec& pot, const PositionGrid& grid);

/// Heat-semigroup smoothing exp(eps * d^2/dx^2) applied spectrally to samples.
RealVector heat_smooth(const Eigen::Ref<const RealVector>& samples, double eps, const PositionGrid& grid);

/// V~ = e^{eps Laplacian} V sampled on the grid.
RealVector mollify(const PotentialSpec& pot, double eps, const PositionGrid& grid);
/// dV~/dx = e^{eps Laplacian} V' (the heat flow commutes with d/dx).
RealVector mollified_gradient(const PotentialSpec& pot, double eps, const PositionGrid& grid);

/// Shell diagnostics for int |V^(S)| |S|^m dS <= C |b^{m-1-theta} - a^{m-1-theta}|.
struct FourierConditionReport {
  std::vector<std::pair<double, double>> shells;
  /// shell_integrals[m][s]
  std::array<std::vector<double>, 3> shell_integrals;
  /// ratio of each shell integral to its bound shape |b^e - a^e|
  std::array<std::vector<double>, 3> ratios;
  std::array<double, 3> fitted_C{};
  /// log-log slope of shell integrals against shell lower edge
  std::array<double, 3> fitted_exponents{};
  std::array<std::vector<bool>, 3> shell_passes;
  std::array<bool, 3> passes{};
  /// int |V^(S)| |S|^2/(1+|S|^2) dS over the resolved band
  double integrability_value = 0.0;
  bool integrability_passes = true;
  double theta_used = 0.0;
  double slack = 3.0;
  bool all_pass() const;
};

struct FourierCheckOptions {
  double slack = 3.0;
  /// Samples are multiplied by a smooth taper that is 1 on the central
  /// `flat_fraction` of the domain and 0 outside `support_fraction`.
  /// The taper is off when support_fraction <= flat_fraction.
  double flat_fraction = 0.6;
  double support_fraction = 0.9;
};

FourierConditionReport check_fourier_conditions(const PotentialSpec& pot, const PositionGrid& grid,
                                                double theta, const FourierCheckOptions& options = {});
FourierConditionReport check_fourier_conditions(const Eigen::Ref<const RealVector>& samples,
                                                const PositionGrid& grid, double theta,
                                                const FourierCheckOptions& options = {});

struct BvDiagnostic {
  /// sum_i |g_{i+1} - g_i| of the sampled gradient
  double total_variation = 0.0;
  /// max_i |g_i| / (1 + |x_i|)
  double growth_bound = 0.0;
};

BvDiagnostic bv_gradient_diagnostic(const PotentialSpec& pot, const PositionGrid& grid);

}  // namespace roughsc
