#include "roughsc/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace roughsc {

double branch_exponent(double theta) { return 2.0 / (1.0 - theta); }

double branch_amplitude(double theta) {
  return std::pow((1.0 - theta) * (1.0 - theta) / 2.0, 1.0 / (1.0 - theta));
}

namespace {

double sign_factor(BranchSign s) {
  switch (s) {
    case BranchSign::Plus:
      return 1.0;
    case BranchSign::Minus:
      return -1.0;
    case BranchSign::Rest:
      break;
  }
  return 0.0;
}

double rough_force(double x, double theta) {
  if (x == 0.0) return 0.0;
  return (1.0 + theta) * std::pow(std::abs(x), theta) * (x > 0.0 ? 1.0 : -1.0);
}

}  // namespace

double TrajectoryBranch::position(double t) const {
  if (sign == BranchSign::Rest || t <= t0) return 0.0;
  return sign_factor(sign) * c0 * std::pow(t - t0, nu);
}

double TrajectoryBranch::momentum(double t) const {
  if (sign == BranchSign::Rest || t <= t0) return 0.0;
  return sign_factor(sign) * c0 * nu * std::pow(t - t0, nu - 1.0);
}

std::vector<TrajectoryBranch> branch_family(double theta, const std::vector<BranchRequest>& requests) {
  if (!(theta >= 0.0 && theta < 1.0)) throw ConfigurationError("branch_family: theta must lie in [0,1)");
  const double nu = branch_exponent(theta);
  const double c0 = branch_amplitude(theta);
  std::vector<TrajectoryBranch> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    if (!(r.t0 >= 0.0)) throw ConfigurationError("branch_family: delays must be non-negative");
    out.push_back({r.sign, r.t0, theta, c0, nu});
  }
  return out;
}

BranchResidual branch_residual(const TrajectoryBranch& branch, const std::vector<double>& times, double step) {
  BranchResidual res;
  for (double t : times) {
    const double dx = (branch.position(t + step) - branch.position(t - step)) / (2.0 * step);
    const double dp = (branch.momentum(t + step) - branch.momentum(t - step)) / (2.0 * step);
    const double p = branch.momentum(t);
    const double f = rough_force(branch.position(t), branch.theta);
    res.position_residual = std::max(res.position_residual, std::abs(dx - p) / std::max(1.0, std::abs(p)));
    res.momentum_residual = std::max(res.momentum_residual, std::abs(dp - f) / std::max(1.0, std::abs(f)));
  }
  return res;
}

std::string to_string(BranchSign sign) {
  switch (sign) {
    case BranchSign::Plus:
      return "plus";
    case BranchSign::Minus:
      return "minus";
    case BranchSign::Rest:
      break;
  }
  return "rest";
}

nlohmann::json to_json(const TrajectoryBranch& branch) {
  return {{"sign", to_string(branch.sign)},
          {"t0", branch.t0},
          {"theta", branch.theta},
          {"c0", branch.c0},
          {"nu", branch.nu}};
}

// ---- force fields

namespace {

// trapezoid nodes for a unit Gaussian on [-8, 8]
constexpr int kConvolutionNodes = 801;

const std::array<double, 2 * kConvolutionNodes>& unit_gaussian_rule() {
  static const auto rule = [] {
    std::array<double, 2 * kConvolutionNodes> r{};
    const double h = 16.0 / (kConvolutionNodes - 1);
    double total = 0.0;
    for (int i = 0; i < kConvolutionNodes; ++i) {
      const double z = -8.0 + h * i;
      r[2 * i] = z;
      r[2 * i + 1] = std::exp(-0.5 * z * z);
      total += r[2 * i + 1];
    }
    for (int i = 0; i < kConvolutionNodes; ++i) r[2 * i + 1] /= total;
    return r;
  }();
  return rule;
}

double cubic_weights_eval(const std::vector<double>& table, double s) {
  // s in table-index units; 4-point Lagrange, clamped stencil
  const auto n = static_cast<long>(table.size());
  long i = static_cast<long>(std::floor(s)) - 1;
  i = std::clamp(i, 0L, n - 4);
  const double u = s - static_cast<double>(i);
  const double w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
  const double w1 = u * (u - 2.0) * (u - 3.0) / 2.0;
  const double w2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
  const double w3 = u * (u - 1.0) * (u - 2.0) / 6.0;
  return w0 * table[i] + w1 * table[i + 1] + w2 * table[i + 2] + w3 * table[i + 3];
}

}  // namespace

ForceField ForceField::exact(const PotentialSpec& pot) { return ForceField(pot); }

ForceField ForceField::mollified(const PotentialSpec& pot, double eps, const PositionGrid& grid) {
  if (!(eps >= 0.0)) throw ConfigurationError("ForceField: eps_mollify must be non-negative");
  ForceField f(pot);
  if (eps == 0.0) return f;
  f.eps_ = eps;
  f.x0_ = grid.min();
  f.dx_ = grid.spacing();
  std::vector<double> table(static_cast<std::size_t>(grid.size()));
  for (Index i = 0; i < grid.size(); ++i) table[static_cast<std::size_t>(i)] = f.convolved(grid.node(i));
  f.table_ = std::move(table);
  return f;
}

ForceField ForceField::for_range(const PotentialSpec& pot, double eps, double lo, double hi) {
  if (eps == 0.0) return exact(pot);
  const double width = hi - lo;
  return mollified(pot, eps, PositionGrid(4096, lo - 0.05 * width, hi + 0.05 * width));
}

double ForceField::convolved(double x) const {
  const auto& rule = unit_gaussian_rule();
  const double sigma = std::sqrt(2.0 * eps_);
  double acc = 0.0;
  for (int i = 0; i < kConvolutionNodes; ++i) acc += rule[2 * i + 1] * pot_.gradient(x - sigma * rule[2 * i]);
  return -acc;
}

double ForceField::operator()(double x) const {
  if (table_.empty()) return -pot_.gradient(x);
  const double s = (x - x0_) / dx_;
  if (s < 1.0 || s > static_cast<double>(table_.size()) - 2.0) return convolved(x);
  return cubic_weights_eval(table_, s);
}

// ---- trajectories

SampledPath integrate_hamiltonian(double x0, double p0, const ForceField& field, double dt, double t_final,
                                  int sample_every) {
  if (!(dt > 0.0)) throw ConfigurationError("integrate_hamiltonian: dt must be positive");
  if (sample_every < 1) throw ConfigurationError("integrate_hamiltonian: sample_every must be >= 1");
  const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(t_final) / dt - 1e-9)));
  const double h = t_final / static_cast<double>(steps);
  SampledPath path;
  double x = x0;
  double p = p0;
  path.t.push_back(0.0);
  path.x.push_back(x);
  path.p.push_back(p);
  if (t_final == 0.0) return path;
  double f = field(x);
  for (long s = 1; s <= steps; ++s) {
    p += 0.5 * h * f;
    x += h * p;
    f = field(x);
    p += 0.5 * h * f;
    if (!std::isfinite(x) || !std::isfinite(p)) throw NumericalError("integrate_hamiltonian: non-finite state");
    if (s % sample_every == 0 || s == steps) {
      path.t.push_back(h * static_cast<double>(s));
      path.x.push_back(x);
      path.p.push_back(p);
    }
  }
  return path;
}

SampledPath integrate_hamiltonian(double x0, double p0, const PotentialSpec& pot, double dt, double t_final,
                                  int sample_every) {
  return integrate_hamiltonian(x0, p0, ForceField::exact(pot), dt, t_final, sample_every);
}

double ParticleCloud::total_mass() const {
  double m = 0.0;
  for (const auto& a : particles) m += a.mass;
  return m;
}

PhaseSpaceDensity ParticleCloud::as_measure() const { return PhaseSpaceDensity(AtomicMeasure{particles}); }

ParticleCloud transport_particles(const ParticleCloud& cloud, const ForceField& field, double dt, double t_final) {
  ParticleCloud out{cloud.particles, cloud.time + t_final};
  for (auto& a : out.particles) {
    const auto path = integrate_hamiltonian(a.x, a.p, field, dt, t_final, 1 << 30);
    a.x = path.x.back();
    a.p = path.p.back();
  }
  return out;
}

ParticleCloud transport_particles(const ParticleCloud& cloud, const PotentialSpec& pot, double eps_mollify,
                                  double dt, double t_final) {
  if (eps_mollify == 0.0 || cloud.particles.empty()) {
    return transport_particles(cloud, ForceField::exact(pot), dt, t_final);
  }
  double lo = cloud.particles.front().x;
  double hi = lo;
  for (const auto& a : cloud.particles) {
    lo = std::min(lo, a.x);
    hi = std::max(hi, a.x);
  }
  const double pad = 2.0 + std::abs(t_final) * 4.0;
  return transport_particles(cloud, ForceField::for_range(pot, eps_mollify, lo - pad, hi + pad), dt, t_final);
}

void write_particles_csv(const std::filesystem::path& path, const ParticleCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("write_particles_csv: cannot open " + path.string());
  out.precision(17);
  out << "mass,x,p\n";
  for (const auto& a : cloud.particles) out << a.mass << ',' << a.x << ',' << a.p << '\n';
}

ParticleCloud read_particles_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("read_particles_csv: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("mass,x,p", 0) != 0) throw ConfigurationError("read_particles_csv: bad header");
  ParticleCloud cloud;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Atom a{};
    char c1 = 0;
    char c2 = 0;
    if (!(row >> a.mass >> c1 >> a.x >> c2 >> a.p) || c1 != ',' || c2 != ',') {
      throw ConfigurationError("read_particles_csv: malformed row '" + line + "'");
    }
    cloud.particles.push_back(a);
  }
  return cloud;
}

// ---- semi-Lagrangian transport

namespace {

std::array<double, 4> lagrange4(double u) {
  // nodes at -1, 0, 1, 2
  return {-u * (u - 1.0) * (u - 2.0) / 6.0, (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
          -(u + 1.0) * u * (u - 2.0) / 2.0, (u + 1.0) * u * (u - 1.0) / 6.0};
}

}  // namespace

double bicubic_sample(const GridFunction& f, double x, double p, bool clamp) {
  const double sx = (x - f.grid.x.min()) / f.grid.x.spacing();
  const double sp = (p - f.grid.p.min()) / f.grid.p.spacing();
  const auto nx = f.values.rows();
  const auto np = f.values.cols();
  if (!(sx > -1.0 && sp > -1.0 && sx < static_cast<double>(nx) && sp < static_cast<double>(np))) return 0.0;
  const auto i = static_cast<Index>(std::floor(sx));
  const auto j = static_cast<Index>(std::floor(sp));
  const auto wx = lagrange4(sx - static_cast<double>(i));
  const auto wp = lagrange4(sp - static_cast<double>(j));
  auto at = [&](Index a, Index b) {
    return (a < 0 || b < 0 || a >= nx || b >= np) ? 0.0 : f.values(a, b);
  };
  double v = 0.0;
  for (int a = 0; a < 4; ++a) {
    double row = 0.0;
    for (int b = 0; b < 4; ++b) row += wp[b] * at(i - 1 + a, j - 1 + b);
    v += wx[a] * row;
  }
  if (clamp) {
    const double c00 = at(i, j), c01 = at(i, j + 1), c10 = at(i + 1, j), c11 = at(i + 1, j + 1);
    const double lo = std::min({c00, c01, c10, c11});
    const double hi = std::max({c00, c01, c10, c11});
    v = std::clamp(v, lo, hi);
  }
  return v;
}

namespace {

ForceField field_for_grid(const PhaseGrid& grid, const PotentialSpec& pot, double eps) {
  if (!(eps >= 0.0)) throw ConfigurationError("liouville_semi_lagrangian: eps_mollify must be non-negative");
  if (eps == 0.0) return ForceField::exact(pot);
  const double w = grid.x.length();
  return ForceField::mollified(pot, eps, PositionGrid(4096, grid.x.min() - 0.25 * w, grid.x.max() + 0.25 * w));
}

// fraction `a` of cell j taken from its right end, limited reconstruction
double partial_flux(double fm, double f0, double fp, double a, Limiter limiter, double upper) {
  double ep = 1.0;
  double em = 1.0;
  if (limiter != Limiter::None) {
    const double dp = fp - f0;
    const double dm = f0 - fm;
    const bool bounded = limiter == Limiter::Bounded;
    if (dp > 0.0) {
      ep = std::min(1.0, 2.0 * f0 / dp);
    } else if (dp < 0.0 && bounded) {
      ep = std::min(1.0, -2.0 * (upper - f0) / dp);
    }
    if (dm > 0.0 && bounded) {
      em = std::min(1.0, 2.0 * (upper - f0) / dm);
    } else if (dm < 0.0) {
      em = std::min(1.0, -2.0 * f0 / dm);
    }
    ep = std::max(ep, 0.0);
    em = std::max(em, 0.0);
  }
  return a * (f0 + ep * (1.0 - a) * (2.0 - a) / 6.0 * (fp - f0) + em * (1.0 - a) * (1.0 + a) / 6.0 * (f0 - fm));
}

}  // namespace

void conservative_shift(double* line, Index n, Index stride, double cells, Limiter limiter, double upper,
                        std::vector<double>& scratch) {
  if (cells == 0.0 || n == 0) return;
  // work on a copy oriented so the shift is non-negative
  const bool flip = cells < 0.0;
  const double d = std::abs(cells);
  scratch.assign(static_cast<std::size_t>(2 * n + 1), 0.0);
  double* f = scratch.data();
  double* flux = scratch.data() + n;  // flux[k + 1] at interface k + 1/2, k = -1..n-1
  for (Index i = 0; i < n; ++i) f[i] = line[(flip ? n - 1 - i : i) * stride];
  auto at = [&](Index i) { return (i < 0 || i >= n) ? 0.0 : f[i]; };
  const auto m = static_cast<Index>(std::floor(d));
  const double a = d - static_cast<double>(m);
  // running sum of the m whole cells ending at k
  double whole = 0.0;
  for (Index q = -1 - m + 1; q <= -1; ++q) whole += at(q);
  for (Index k = -1; k < n; ++k) {
    if (k > -1) whole += at(k) - at(k - m);
    const Index j = k - m;
    double part = 0.0;
    if (a > 0.0 && j >= -1 && j <= n) {
      const double f0 = at(j);
      const double fm = at(j - 1);
      const double fp = at(j + 1);
      if (f0 != 0.0 || fm != 0.0 || fp != 0.0) part = partial_flux(fm, f0, fp, a, limiter, upper);
    }
    flux[k + 1] = whole + part;
  }
  for (Index i = 0; i < n; ++i) {
    line[(flip ? n - 1 - i : i) * stride] = f[i] + flux[i] - flux[i + 1];
  }
}

SemiLagrangianSolver::SemiLagrangianSolver(const PhaseSpaceDensity& rho0, const PotentialSpec& pot,
                                           double eps_mollify, double dt, Limiter limiter)
    : rho_(rho0.grid_function()),
      field_(field_for_grid(rho0.grid_function().grid, pot, eps_mollify)),
      dt_(dt),
      limiter_(limiter),
      upper_(rho0.grid_function().values.maxCoeff()) {
  if (!(dt > 0.0)) throw ConfigurationError("SemiLagrangianSolver: dt must be positive");
  if (limiter != Limiter::None && rho_.values.minCoeff() < 0.0) {
    throw ConfigurationError("SemiLagrangianSolver: limiters need a non-negative initial density");
  }
  const auto& g = rho_.grid;
  force_.resize(static_cast<std::size_t>(g.x.size()));
  for (Index i = 0; i < g.x.size(); ++i) force_[static_cast<std::size_t>(i)] = field_(g.x.node(i));
}

void SemiLagrangianSolver::advance(double duration, Warnings* warnings) {
  if (!(duration >= 0.0)) throw ConfigurationError("SemiLagrangianSolver: duration must be non-negative");
  if (duration == 0.0) return;
  const long steps = std::max(1L, static_cast<long>(std::ceil(duration / dt_ - 1e-9)));
  const double h = duration / static_cast<double>(steps);
  if (!warned_cfl_) {
    const auto& g = rho_.grid;
    const double p_max = std::max(std::abs(g.p.min()), std::abs(g.p.max()));
    double f_max = 0.0;
    for (double f : force_) f_max = std::max(f_max, std::abs(f));
    const double cx = p_max * h / g.x.spacing();
    const double cp = f_max * h / g.p.spacing();
    if (cx > 1.0 || cp > 1.0) {
      warn(warnings, "liouville_semi_lagrangian: characteristics cross " + std::to_string(std::max(cx, cp)) +
                         " cells per step");
      warned_cfl_ = true;
    }
  }
  for (long s = 0; s < steps; ++s) step(h);
  time_ += duration;
}

void SemiLagrangianSolver::step(double h) {
  const auto& g = rho_.grid;
  const Index nx = g.x.size();
  const Index np = g.p.size();
  double* data = rho_.values.data();  // column-major: column j holds x-line at p_j
  auto stream = [&](double tau) {
    for (Index j = 0; j < np; ++j) {
      conservative_shift(data + j * nx, nx, 1, g.p.node(j) * tau / g.x.spacing(), limiter_, upper_, scratch_);
    }
  };
  stream(0.5 * h);
  for (Index i = 0; i < nx; ++i) {
    conservative_shift(data + i, np, nx, force_[static_cast<std::size_t>(i)] * h / g.p.spacing(), limiter_, upper_,
                       scratch_);
  }
  stream(0.5 * h);
  if (!rho_.values.allFinite()) throw NumericalError("liouville_semi_lagrangian: non-finite density");
}

PhaseSpaceDensity SemiLagrangianSolver::density() const { return PhaseSpaceDensity(rho_, DensityTag::Classical); }

PhaseSpaceDensity liouville_semi_lagrangian(const PhaseSpaceDensity& rho0, const PotentialSpec& pot,
                                            double eps_mollify, double dt, double t_final, Warnings* warnings,
                                            Limiter limiter) {
  SemiLagrangianSolver solver(rho0, pot, eps_mollify, dt, limiter);
  solver.advance(t_final, warnings);
  return solver.density();
}

}  // namespace roughsc
