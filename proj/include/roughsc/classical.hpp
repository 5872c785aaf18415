#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "roughsc/phase_space.hpp"
#include "roughsc/potential.hpp"

namespace roughsc {

enum class BranchSign { Plus, Minus, Rest };

/// One solution of X' = P, P' = (1+theta)|X|^theta sgn X leaving (0,0) at time t0:
/// X(t) = +-c0 (t - t0)^nu, P(t) = +-c0 nu (t - t0)^{nu-1} for t > t0, (0,0) before.
struct TrajectoryBranch {
  BranchSign sign;
  double t0;
  double theta;
  double c0;
  double nu;

  double position(double t) const;
  double momentum(double t) const;
};

struct BranchRequest {
  BranchSign sign;
  double t0;
};

/// nu = 2/(1-theta), c0 = ((1-theta)^2/2)^{1/(1-theta)}.
double branch_exponent(double theta);
double branch_amplitude(double theta);

std::vector<TrajectoryBranch> branch_family(double theta, const std::vector<BranchRequest>& requests);

/// Central-difference residuals max |X' - P| and |P' - (1+theta)|X|^theta sgn X|, each
/// relative to max(1, |P|) resp. max(1, |force|), over the sample times.
struct BranchResidual {
  double position_residual = 0.0;
  double momentum_residual = 0.0;
};
BranchResidual branch_residual(const TrajectoryBranch& branch, const std::vector<double>& times,
                               double step = 1e-6);

nlohmann::json to_json(const TrajectoryBranch& branch);
std::string to_string(BranchSign sign);

struct SampledPath {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> p;
};

/// Force -dV~/dx evaluated anywhere. The exact field uses the analytic gradient;
/// the mollified one tabulates the Gaussian convolution of V' (variance 2 eps) on the
/// grid nodes, interpolates cubically inside and convolves directly outside.
class ForceField {
 public:
  static ForceField exact(const PotentialSpec& pot);
  static ForceField mollified(const PotentialSpec& pot, double eps, const PositionGrid& grid);
  /// eps == 0 gives the exact field; otherwise a grid is derived from [lo, hi].
  static ForceField for_range(const PotentialSpec& pot, double eps, double lo, double hi);

  double operator()(double x) const;
  bool is_mollified() const { return !table_.empty(); }

 private:
  ForceField(PotentialSpec pot) : pot_(std::move(pot)) {}

  double convolved(double x) const;

  PotentialSpec pot_;
  double eps_ = 0.0;
  std::vector<double> table_;
  double x0_ = 0.0;
  double dx_ = 1.0;
};

/// Stormer-Verlet for X' = P, P' = F(X). Samples every `sample_every` steps plus the end.
SampledPath integrate_hamiltonian(double x0, double p0, const ForceField& field, double dt, double t_final,
                                  int sample_every = 1);
SampledPath integrate_hamiltonian(double x0, double p0, const PotentialSpec& pot, double dt, double t_final,
                                  int sample_every = 1);

struct ParticleCloud {
  std::vector<Atom> particles;
  double time = 0.0;

  double total_mass() const;
  PhaseSpaceDensity as_measure() const;
};

ParticleCloud transport_particles(const ParticleCloud& cloud, const ForceField& field, double dt, double t_final);
ParticleCloud transport_particles(const ParticleCloud& cloud, const PotentialSpec& pot, double eps_mollify,
                                  double dt, double t_final);

void write_particles_csv(const std::filesystem::path& path, const ParticleCloud& cloud);
ParticleCloud read_particles_csv(const std::filesystem::path& path);

/// Tensor cubic Lagrange interpolation of grid values at (x, p); zero outside the grid.
/// When `clamp` is set the result is limited to the range of the surrounding 2x2 cell.
double bicubic_sample(const GridFunction& f, double x, double p, bool clamp);

/// Overshoot control for the 1D conservative shifts.
/// Positive keeps rho >= 0; Bounded also keeps rho <= the initial maximum.
enum class Limiter { None, Positive, Bounded };

/// Mass-conserving shift of one line of cell averages by `cells` (fractional) cells,
/// third-order flux reconstruction with optional limiting; mass beyond the ends is lost.
void conservative_shift(double* line, Index n, Index stride, double cells, Limiter limiter, double upper,
                        std::vector<double>& scratch);

/// Semi-Lagrangian solver for d_t rho + p d_x rho - dV~/dx d_p rho = 0, Strang split into
/// free streaming (half step), a momentum kick and free streaming again. Each substep
/// shifts grid lines by a constant amount in flux form, so mass is conserved to rounding
/// while nothing leaves the grid.
class SemiLagrangianSolver {
 public:
  SemiLagrangianSolver(const PhaseSpaceDensity& rho0, const PotentialSpec& pot, double eps_mollify, double dt,
                       Limiter limiter = Limiter::Bounded);

  /// Advance by `duration` in steps of at most dt (the last step is shortened).
  void advance(double duration, Warnings* warnings = nullptr);
  double time() const { return time_; }
  PhaseSpaceDensity density() const;
  const GridFunction& grid_function() const { return rho_; }

 private:
  void step(double h);

  GridFunction rho_;
  ForceField field_;
  std::vector<double> force_;
  double dt_;
  Limiter limiter_;
  double upper_;
  double time_ = 0.0;
  bool warned_cfl_ = false;
  std::vector<double> scratch_;
};

PhaseSpaceDensity liouville_semi_lagrangian(const PhaseSpaceDensity& rho0, const PotentialSpec& pot,
                                            double eps_mollify, double dt, double t_final,
                                            Warnings* warnings = nullptr, Limiter limiter = Limiter::Bounded);

}  // namespace roughsc
