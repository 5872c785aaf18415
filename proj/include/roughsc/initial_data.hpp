#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "roughsc/phase_space.hpp"
#include "roughsc/quantum.hpp"

namespace roughsc {

/// psi(x) = (pi eps)^{-1/4} exp(-(x-x0)^2/(2 eps) + i p0 x/eps), renormalized on the grid.
/// Throws when (x0, p0) is within 6 sqrt(eps/2) of the position or momentum edge.
WaveFunction coherent_state(double x0, double p0, double eps, const PositionGrid& grid);

/// Wigner function of coherent_state: (pi eps)^{-1} exp(-((x-x0)^2 + (p-p0)^2)/eps).
double coherent_wigner(double x0, double p0, double eps, double x, double p);

/// Displaced oscillator mixture sum (1-q) q^n |n><n| whose Wigner function is the
/// isotropic Gaussian at (x0, p0) with per-axis variance `variance` (>= eps/2).
/// The geometric tail is cut once it drops below `tail`.
DensityEnsemble gaussian_mixed_state(double x0, double p0, double variance, double eps, const PositionGrid& grid,
                                     double tail = 1e-12);

/// Finite mixture of coherent states; each atom carries (weight, x0, p0).
struct CoherentMixture {
  double eps = 0.0;
  std::vector<Atom> centres;

  DensityEnsemble ensemble(const PositionGrid& grid) const;
  /// Exact Wigner function averaged over each cell of the phase grid.
  GridFunction wigner_cell_average(const PhaseGrid& grid) const;
};

/// Unit-mass bump w(x,k) = A exp(1 - 1/(1 - r^2)), r^2 = ((x-cx)/(rho ax))^2 + ((k-ck)/(rho ak))^2,
/// rho = 1 - |(cx, ck)|, so supp w stays inside the unit disk. Scaled at eps as
/// lambda^{a_mass} w(lambda^{a_x} x, lambda^{a_k} k) with lambda = ln(1/eps).
struct ConcentratingProfile {
  double theta = 0.5;
  double center_x = 0.0;
  double center_k = 0.0;
  double anisotropy_x = 1.0;
  double anisotropy_k = 1.0;

  void validate() const;
  double a_mass() const { return (7.0 + 3.0 * theta) / 30.0; }
  double a_x() const { return (1.0 + theta) / 6.0; }
  double a_k() const { return (1.0 - theta) / 15.0; }
  static double lambda(double eps);

  /// Unscaled bump.
  double w(double x, double k) const;
  /// Scaled datum at eps.
  double scaled(double x, double k, double eps) const;
  /// int w over {x > 0} (resp. {x < 0}) by tensor Gauss-Legendre quadrature.
  double c_plus() const;
  double c_minus() const;
  /// Half-widths of the scaled support box: (lambda^{-a_x}, lambda^{-a_k}).
  std::pair<double, double> support(double eps) const;
};

/// Shift cx along x giving int_{x>0} w = target with ck = 0 and unit anisotropy.
double bump_shift_for_mass(double target);

struct ConcentratingData {
  /// lambda^{a_mass} w(lambda^{a_x} x, lambda^{a_k} k) sampled on the raster
  PhaseSpaceDensity target;
  CoherentMixture mixture;
  DensityEnsemble ensemble;
  /// L2 distance between target and the realized (cell-averaged) Wigner function
  double realization_gap = 0.0;
  double target_mass = 0.0;
  double c_plus = 0.0;
  double c_minus = 0.0;
};

/// Rasterizes the scaled datum and realizes it by a lattice of `lattice_n` x `lattice_n`
/// coherent states restricted to the support. The raster must resolve the
/// concentrated scales (dx < lambda^{-a_x}/16, dp < lambda^{-a_k}/16).
ConcentratingData concentrating_wigner_data(const ConcentratingProfile& profile, double eps, const PhaseGrid& raster,
                                            const PositionGrid& quantum_grid, int lattice_n = 16);

enum class LawKind { Gaussian, PointMass, UniformBox };

/// Sampling law for phase points. Gaussian: mean and per-axis sigma. UniformBox:
/// mean +- half widths (sigma fields). PointMass: the mean.
struct RandomFamilySpec {
  LawKind law = LawKind::Gaussian;
  double mean_x = 0.0;
  double mean_p = 0.0;
  double sigma_x = 1.0;
  double sigma_p = 1.0;
  Index samples = 64;
  std::uint64_t seed = 0;

  void validate() const;
  /// Law density (Dirac laws return 0 away from the mean and +inf on it).
  double density(double x, double p) const;
};

struct FamilyMember {
  /// phase point with mass 1/M
  Atom point;
  WaveFunction state;
};

/// Sample i draws from its own mt19937_64 stream seeded by seed_seq{seed, i}.
std::vector<Atom> sample_phase_points(const RandomFamilySpec& spec);
std::vector<FamilyMember> sample_random_family(const RandomFamilySpec& spec, double eps, const PositionGrid& grid);

/// Top eigenvalue of sum_i w_i |psi_i><psi_i| divided by eps, by block power iteration on the
/// weighted Gram matrix. Values <= 1 mean the operator bound holds.
double check_epsn_operator_bound(const std::vector<EnsembleMember>& family, double eps);

nlohmann::json to_json(const RandomFamilySpec& spec, double eps);

}  // namespace roughsc
