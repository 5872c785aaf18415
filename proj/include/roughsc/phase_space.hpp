#pragma once

#include <variant>
#include <vector>

#include <json.hpp>

#include "roughsc/quantum.hpp"
#include "roughsc/spectral_grid.hpp"

namespace roughsc {

/// Values on a PhaseGrid: rows index x, columns index p.
struct GridFunction {
  PhaseGrid grid;
  RealArray2 values;
};

struct Atom {
  double mass;
  double x;
  double p;
};

struct AtomicMeasure {
  std::vector<Atom> atoms;
};

/// What a grid density represents; Husimi densities must be non-negative.
enum class DensityTag { Generic, Wigner, Husimi, Classical };

class PhaseSpaceDensity {
 public:
  PhaseSpaceDensity(GridFunction grid_function, DensityTag tag = DensityTag::Generic);
  PhaseSpaceDensity(AtomicMeasure measure);

  bool is_grid() const { return std::holds_alternative<GridFunction>(rep_); }
  bool is_atomic() const { return std::holds_alternative<AtomicMeasure>(rep_); }
  /// Throws UnsupportedRepresentation for the other representation.
  const GridFunction& grid_function() const;
  GridFunction& grid_function();
  const AtomicMeasure& atomic() const;

  DensityTag tag() const { return tag_; }
  /// dx*dp*sum values, or the sum of atom masses.
  double total_mass() const;

 private:
  std::variant<GridFunction, AtomicMeasure> rep_;
  DensityTag tag_;
};

/// Momentum axis induced by the Wigner transform at scale eps: n nodes,
/// dp = pi*eps/length, centered on zero.
PhaseGrid build_wigner_grid(const PositionGrid& x_grid, double eps);

/// Largest |p| that build_wigner_grid can represent without aliasing.
double wigner_momentum_window(const PositionGrid& x_grid, double eps);

/// W(x,p) = (2 pi)^{-1} int psi(x + eps y/2) conj(psi(x - eps y/2)) e^{-ipy} dy on the
/// grid from build_wigner_grid. Throws ConfigurationError when the state's momentum
/// content does not fit the window; boundary proximity is a warning.
PhaseSpaceDensity wigner(const WaveFunction& state, Warnings* warnings = nullptr);
PhaseSpaceDensity wigner_ensemble(const DensityEnsemble& ensemble, Warnings* warnings = nullptr);

/// exp(eps * Laplacian) on phase space (Gaussian of variance 2 eps per axis), spectral.
PhaseSpaceDensity husimi(const PhaseSpaceDensity& w, double eps);

double sup_norm(const PhaseSpaceDensity& w);
double l2_norm(const PhaseSpaceDensity& w);
double min_value(const PhaseSpaceDensity& w);

struct Marginals {
  /// dp * sum_p W(x, p)
  RealVector x;
  /// dx * sum_x W(x, p)
  RealVector p;
};
Marginals marginals(const PhaseSpaceDensity& w);

/// Characteristic function int int W e^{-i(xi x + eta p)} dx dp of the ensemble's
/// Wigner function, evaluated without building a phase grid. Entry (a, b) is at
/// (xi[a], eta[b]).
Eigen::MatrixXcd wigner_characteristic(const DensityEnsemble& ensemble, const Eigen::Ref<const RealVector>& xi,
                                       const Eigen::Ref<const RealVector>& eta);
/// Same for the Husimi function: the Wigner one times exp(-eps (xi^2 + eta^2)).
Eigen::MatrixXcd husimi_characteristic(const DensityEnsemble& ensemble, const Eigen::Ref<const RealVector>& xi,
                                       const Eigen::Ref<const RealVector>& eta);

/// Husimi mass in {x > threshold} (upper = true) or {x < threshold}. The Husimi
/// x-marginal is |psi|^2 convolved with a Gaussian of variance 2 eps.
double husimi_half_line_mass(const DensityEnsemble& ensemble, double threshold, bool upper);
/// Same for a grid density (cells whose node lies strictly beyond the threshold).
double half_line_mass(const PhaseSpaceDensity& w, double threshold, bool upper);

nlohmann::json to_json(const AtomicMeasure& measure);
AtomicMeasure atomic_measure_from_json(const nlohmann::json& j);

/// Raw values in the binary grid format (rows = x, cols = p).
void dump_density(const std::filesystem::path& path, const PhaseSpaceDensity& w);

}  // namespace roughsc
