#include "roughsc/quantum.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "roughsc/hashing.hpp"

namespace roughsc {

double WaveFunction::norm() const {
  return std::sqrt(quadrature(values.cwiseAbs2(), grid));
}

RealVector WaveFunction::density() const { return values.cwiseAbs2(); }

DensityEnsemble::DensityEnsemble(std::vector<EnsembleMember> members) : members_(std::move(members)) {
  if (members_.empty()) throw ConfigurationError("DensityEnsemble: no members");
  const auto& first = members_.front().state;
  double total = 0.0;
  for (const auto& m : members_) {
    if (!(m.weight > 0.0 && m.weight <= 1.0)) {
      throw ConfigurationError("DensityEnsemble: weights must lie in (0,1]");
    }
    if (!(m.state.grid == first.grid) || m.state.eps != first.eps) {
      throw ConfigurationError("DensityEnsemble: members must share grid and eps");
    }
    total += m.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigurationError("DensityEnsemble: weights sum to " + std::to_string(total) + ", not 1");
  }
}

DensityEnsemble DensityEnsemble::pure(WaveFunction state) {
  return DensityEnsemble({EnsembleMember{1.0, std::move(state)}});
}

double DensityEnsemble::trace() const {
  double total = 0.0;
  for (const auto& m : members_) total += m.weight * m.state.norm() * m.state.norm();
  return total;
}

SplitStepPropagator::SplitStepPropagator(const PositionGrid& grid, double eps, const PotentialSpec& pot,
                                         double alpha)
    : grid_(grid), eps_(eps), alpha_(alpha), potential_(evaluate(pot, grid)),
      k2_(grid.frequencies().array().square().matrix()) {
  if (!(eps > 0.0)) throw ConfigurationError("SplitStepPropagator: eps must be positive");
  if (!(alpha > 0.0)) throw ConfigurationError("SplitStepPropagator: alpha must be positive");
}

void SplitStepPropagator::rebuild(double dt) {
  if (dt == cached_dt_) return;
  cached_dt_ = dt;
  const auto n = static_cast<double>(grid_.size());
  const std::complex<double> i_unit(0.0, 1.0);
  half_potential_phase_ = (-i_unit * (0.5 * dt / eps_) * potential_.array().cast<std::complex<double>>()).exp();
  // kinetic factor exp(-i alpha eps k^2 dt); the 1/n of the inverse FFT is folded in
  kinetic_phase_ =
      ((-i_unit * (alpha_ * eps_ * dt) * k2_.array().cast<std::complex<double>>()).exp() / n).matrix();
}

void SplitStepPropagator::advance(ComplexVector& psi, double duration, double max_dt) {
  if (psi.size() != grid_.size()) throw ShapeError("SplitStepPropagator: state length mismatch");
  if (!(std::abs(max_dt) > 0.0)) throw ConfigurationError("SplitStepPropagator: dt must be nonzero");
  if (duration == 0.0) return;
  const auto steps = static_cast<long>(std::ceil(std::abs(duration) / std::abs(max_dt) - 1e-9));
  const double h = duration / static_cast<double>(std::max(1L, steps));
  rebuild(h);
  for (long s = 0; s < std::max(1L, steps); ++s) {
    psi.array() *= half_potential_phase_.array();
    fft_.forward(psi);
    psi.array() *= kinetic_phase_.array();
    fft_.backward(psi);
    psi.array() *= half_potential_phase_.array();
  }
  if (!psi.allFinite()) throw NumericalError("SplitStepPropagator: non-finite values in state");
}

void SplitStepPropagator::advance(WaveFunction& state, double duration, double max_dt) {
  advance(state.values, duration, max_dt);
}

double SplitStepPropagator::kinetic_phase_per_step(double dt) const {
  return alpha_ * eps_ * grid_.nyquist() * grid_.nyquist() * std::abs(dt);
}

double SplitStepPropagator::potential_phase_per_step(double dt) const {
  return (potential_.maxCoeff() - potential_.minCoeff()) * std::abs(dt) / eps_;
}

namespace {

void check_resolution(const SplitStepPropagator& prop, double dt, Warnings* warnings) {
  constexpr double limit = std::numbers::pi / 4.0;
  const double kin = prop.kinetic_phase_per_step(dt);
  const double pot = prop.potential_phase_per_step(dt);
  if (kin >= limit) {
    warn(warnings, "propagate: kinetic phase per step at Nyquist is " + std::to_string(kin) + " rad (>= pi/4)");
  }
  if (pot >= limit) {
    warn(warnings, "propagate: potential phase per step is " + std::to_string(pot) + " rad (>= pi/4)");
  }
}

}  // namespace

WaveFunction propagate(const WaveFunction& state, const PotentialSpec& pot, const PropagatorConfig& cfg,
                       Warnings* warnings) {
  if (!(cfg.t_final >= 0.0)) throw ConfigurationError("propagate: t_final must be non-negative");
  if (cfg.dt == 0.0) throw ConfigurationError("propagate: dt must be nonzero");
  SplitStepPropagator prop(state.grid, state.eps, pot, cfg.alpha);
  check_resolution(prop, cfg.dt, warnings);
  WaveFunction out = state;
  const double direction = cfg.dt > 0.0 ? 1.0 : -1.0;
  prop.advance(out, direction * cfg.t_final, std::abs(cfg.dt));
  return out;
}

DensityEnsemble propagate_ensemble(const DensityEnsemble& ensemble, const PotentialSpec& pot,
                                   const PropagatorConfig& cfg, Warnings* warnings) {
  if (!(cfg.t_final >= 0.0)) throw ConfigurationError("propagate_ensemble: t_final must be non-negative");
  if (cfg.dt == 0.0) throw ConfigurationError("propagate_ensemble: dt must be nonzero");
  SplitStepPropagator prop(ensemble.grid(), ensemble.eps(), pot, cfg.alpha);
  check_resolution(prop, cfg.dt, warnings);
  DensityEnsemble out = ensemble;
  const double direction = cfg.dt > 0.0 ? 1.0 : -1.0;
  for (auto& member : out.members()) prop.advance(member.state, direction * cfg.t_final, std::abs(cfg.dt));
  return out;
}

ComplexVector apply_hamiltonian(const WaveFunction& state, const PotentialSpec& pot, double alpha) {
  FftEngine fft;
  ComplexVector kinetic = state.values;
  fft.forward(kinetic);
  const RealVector k2 = state.grid.frequencies().array().square();
  const double n = static_cast<double>(state.grid.size());
  kinetic.array() *= (alpha * state.eps * state.eps / n) * k2.array();
  fft.backward(kinetic);
  const RealVector v = evaluate(pot, state.grid);
  return kinetic + (v.array() * state.values.array()).matrix();
}

double energy(const WaveFunction& state, const PotentialSpec& pot, double alpha) {
  const ComplexVector h = apply_hamiltonian(state, pot, alpha);
  return state.grid.spacing() * state.values.dot(h).real();
}

double h2_energy(const WaveFunction& state, const PotentialSpec& pot, double alpha) {
  const ComplexVector h = apply_hamiltonian(state, pot, alpha);
  return quadrature(h.cwiseAbs2(), state.grid);
}

std::complex<double> inner_product(const WaveFunction& a, const WaveFunction& b) {
  if (!(a.grid == b.grid)) throw ShapeError("inner_product: grid mismatch");
  return a.grid.spacing() * a.values.dot(b.values);
}

double boundary_mass(const WaveFunction& state, double margin) {
  double mass = 0.0;
  for (Index i = 0; i < state.grid.size(); ++i) {
    const double x = state.grid.node(i);
    if (x - state.grid.min() < margin || state.grid.max() - x < margin) mass += std::norm(state.values[i]);
  }
  return mass * state.grid.spacing();
}

namespace {

std::string config_description(const PropagatorConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "strang,dt=" << cfg.dt << ",alpha=" << cfg.alpha << ",t_final=" << cfg.t_final;
  return os.str();
}

}  // namespace

void write_checkpoint(const std::filesystem::path& prefix, const WaveFunction& state, double t,
                      const PotentialSpec& pot, const PropagatorConfig& cfg) {
  const Eigen::MatrixXd re = state.values.real().transpose();
  const Eigen::MatrixXd im = state.values.imag().transpose();
  write_grid(prefix.string() + ".re.bin", re);
  write_grid(prefix.string() + ".im.bin", im);
  nlohmann::json sidecar = {
      {"eps", state.eps},
      {"t", t},
      {"grid", {{"n_points", state.grid.size()}, {"x_min", state.grid.min()}, {"x_max", state.grid.max()}}},
      {"potential", pot.describe()},
      {"potential_hash", pot.hash()},
      {"config", config_description(cfg)},
      {"config_hash", fnv1a_hex(config_description(cfg))},
  };
  std::ofstream out(prefix.string() + ".json");
  out << sidecar.dump(2) << "\n";
}

WaveFunction read_checkpoint(const std::filesystem::path& prefix, double* t) {
  std::ifstream in(prefix.string() + ".json");
  if (!in) throw ConfigurationError("read_checkpoint: missing sidecar for " + prefix.string());
  const auto sidecar = nlohmann::json::parse(in);
  const auto& g = sidecar.at("grid");
  PositionGrid grid(g.at("n_points").get<Index>(), g.at("x_min").get<double>(), g.at("x_max").get<double>());
  const Eigen::MatrixXd re = read_grid(prefix.string() + ".re.bin");
  const Eigen::MatrixXd im = read_grid(prefix.string() + ".im.bin");
  if (re.size() != grid.size() || im.size() != grid.size()) {
    throw ShapeError("read_checkpoint: payload does not match grid");
  }
  WaveFunction psi{grid, sidecar.at("eps").get<double>(), ComplexVector(grid.size())};
  for (Index i = 0; i < grid.size(); ++i) psi.values[i] = {re(0, i), im(0, i)};
  if (t != nullptr) *t = sidecar.at("t").get<double>();
  return psi;
}

}  // namespace roughsc
