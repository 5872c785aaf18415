#pragma once

#include <filesystem>
#include <vector>

#include "roughsc/potential.hpp"
#include "roughsc/spectral_grid.hpp"

namespace roughsc {

/// Pure state sampled on a periodic grid at semiclassical scale eps.
struct WaveFunction {
  PositionGrid grid;
  double eps;
  ComplexVector values;

  /// sqrt(dx * sum |psi|^2)
  double norm() const;
  /// |psi_i|^2
  RealVector density() const;
};

struct EnsembleMember {
  double weight;
  WaveFunction state;
};

/// Finite mixture D = sum_i w_i |psi_i><psi_i| with sum w_i = 1.
class DensityEnsemble {
 public:
  DensityEnsemble(std::vector<EnsembleMember> members);

  static DensityEnsemble pure(WaveFunction state);

  const std::vector<EnsembleMember>& members() const { return members_; }
  std::vector<EnsembleMember>& members() { return members_; }
  std::size_t size() const { return members_.size(); }
  double eps() const { return members_.front().state.eps; }
  const PositionGrid& grid() const { return members_.front().state.grid; }
  double trace() const;

 private:
  std::vector<EnsembleMember> members_;
};

enum class SplittingScheme { Strang };

struct PropagatorConfig {
  /// Negative dt runs the evolution backwards in time.
  double dt = 1e-3;
  /// Kinetic prefactor: H = -alpha eps^2 d^2/dx^2 + V.
  double alpha = 0.5;
  SplittingScheme scheme = SplittingScheme::Strang;
  double t_final = 0.0;
};

/// Strang split-step stepper for i eps dpsi/dt = (-alpha eps^2 Laplacian + V) psi.
/// The step is adjusted so that an advance() lands exactly on the requested time.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const PositionGrid& grid, double eps, const PotentialSpec& pot, double alpha = 0.5);

  /// Evolve by `duration` (may be negative) using steps of size at most |max_dt|.
  void advance(ComplexVector& psi, double duration, double max_dt);
  void advance(WaveFunction& state, double duration, double max_dt);

  /// Largest phase increment per step, kinetic (at Nyquist) and potential.
  double kinetic_phase_per_step(double dt) const;
  double potential_phase_per_step(double dt) const;

  const RealVector& potential_samples() const { return potential_; }

 private:
  void rebuild(double dt);

  PositionGrid grid_;
  double eps_;
  double alpha_;
  RealVector potential_;
  RealVector k2_;
  double cached_dt_ = 0.0;
  ComplexVector half_potential_phase_;
  ComplexVector kinetic_phase_;
  FftEngine fft_;
};

/// Throws NumericalError on NaN. Resolution problems are reported through `warnings`.
WaveFunction propagate(const WaveFunction& state, const PotentialSpec& pot, const PropagatorConfig& cfg,
                       Warnings* warnings = nullptr);
DensityEnsemble propagate_ensemble(const DensityEnsemble& ensemble, const PotentialSpec& pot,
                                   const PropagatorConfig& cfg, Warnings* warnings = nullptr);

/// Applies H psi spectrally (kinetic) and pointwise (potential).
ComplexVector apply_hamiltonian(const WaveFunction& state, const PotentialSpec& pot, double alpha = 0.5);
/// <psi, H psi>
double energy(const WaveFunction& state, const PotentialSpec& pot, double alpha = 0.5);
/// ||H psi||^2
double h2_energy(const WaveFunction& state, const PotentialSpec& pot, double alpha = 0.5);

/// L2 inner product dx * sum conj(a) b.
std::complex<double> inner_product(const WaveFunction& a, const WaveFunction& b);

/// Mass of |psi|^2 within `margin` of either grid end.
double boundary_mass(const WaveFunction& state, double margin);

/// Writes <prefix>.re.bin, <prefix>.im.bin (binary grid format) and <prefix>.json
/// (eps, t, grid, potential hash, config hash).
void write_checkpoint(const std::filesystem::path& prefix, const WaveFunction& state, double t,
                      const PotentialSpec& pot, const PropagatorConfig& cfg);
/// Reads a checkpoint back; t is returned through the out parameter when non-null.
WaveFunction read_checkpoint(const std::filesystem::path& prefix, double* t = nullptr);

}  // namespace roughsc
