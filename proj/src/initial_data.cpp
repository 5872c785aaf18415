#include "roughsc/initial_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace roughsc {

namespace {

double edge_margin(double eps) { return 6.0 * std::sqrt(eps / 2.0); }

void check_phase_point(double x0, double p0, double eps, const PositionGrid& grid, double extra_p) {
  const double m = edge_margin(eps);
  if (x0 - grid.min() < m || grid.max() - x0 < m) {
    throw ConfigurationError("coherent state at x0=" + std::to_string(x0) + " is within " + std::to_string(m) +
                             " of the grid edge");
  }
  const double p_edge = eps * grid.nyquist();
  if (std::abs(p0) + extra_p + m > p_edge) {
    throw ConfigurationError("coherent state at p0=" + std::to_string(p0) + " exceeds the momentum range |p| < " +
                             std::to_string(p_edge - m - extra_p));
  }
}

void normalize(WaveFunction& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw NumericalError("state underflowed on the grid");
  psi.values /= n;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

WaveFunction coherent_state(double x0, double p0, double eps, const PositionGrid& grid) {
  if (!(eps > 0.0)) throw ConfigurationError("coherent_state: eps must be positive");
  check_phase_point(x0, p0, eps, grid, 0.0);
  WaveFunction psi{grid, eps, ComplexVector(grid.size())};
  const double amp = std::pow(std::numbers::pi * eps, -0.25);
  for (Index i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i);
    const double d = x - x0;
    psi.values[i] = amp * std::exp(-d * d / (2.0 * eps)) * std::polar(1.0, p0 * x / eps);
  }
  normalize(psi);
  return psi;
}

double coherent_wigner(double x0, double p0, double eps, double x, double p) {
  const double dx = x - x0;
  const double dp = p - p0;
  return std::exp(-(dx * dx + dp * dp) / eps) / (std::numbers::pi * eps);
}

DensityEnsemble gaussian_mixed_state(double x0, double p0, double variance, double eps, const PositionGrid& grid,
                                     double tail) {
  if (!(eps > 0.0)) throw ConfigurationError("gaussian_mixed_state: eps must be positive");
  if (!(variance >= 0.5 * eps)) throw ConfigurationError("gaussian_mixed_state: variance below eps/2");
  if (!(tail > 0.0 && tail < 1.0)) throw ConfigurationError("gaussian_mixed_state: tail must lie in (0,1)");
  // (eps/2) (1+q)/(1-q) = variance
  const double r = 2.0 * variance / eps;
  const double q = (r - 1.0) / (r + 1.0);
  Index levels = 1;
  if (q > 0.0) levels = static_cast<Index>(std::ceil(std::log(tail) / std::log(q)));
  levels = std::max<Index>(levels, 1);
  const double p_extent = std::sqrt(eps * (2.0 * static_cast<double>(levels) + 1.0));
  check_phase_point(x0, p0, eps, grid, p_extent);
  const double x_extent = p_extent;
  if (x0 - x_extent - edge_margin(eps) < grid.min() || x0 + x_extent + edge_margin(eps) > grid.max()) {
    throw ConfigurationError("gaussian_mixed_state: oscillator levels up to " + std::to_string(levels) +
                             " do not fit the grid");
  }
  const Index n = grid.size();
  const double se = std::sqrt(eps);
  RealVector u(n);
  for (Index i = 0; i < n; ++i) u[i] = (grid.node(i) - x0) / se;
  ComplexVector carrier(n);
  for (Index i = 0; i < n; ++i) carrier[i] = std::polar(1.0, p0 * grid.node(i) / eps);
  RealVector prev = RealVector::Zero(n);
  RealVector cur = (std::pow(std::numbers::pi * eps, -0.25) * (-0.5 * u.array().square()).exp()).matrix();
  std::vector<double> weights;
  double total = 0.0;
  for (Index k = 0; k < levels; ++k) {
    const double w = (1.0 - q) * std::pow(q, static_cast<double>(k));
    weights.push_back(w);
    total += w;
  }
  std::vector<EnsembleMember> members;
  members.reserve(static_cast<std::size_t>(levels));
  for (Index k = 0; k < levels; ++k) {
    WaveFunction psi{grid, eps, (cur.cast<std::complex<double>>().array() * carrier.array()).matrix()};
    normalize(psi);
    members.push_back({weights[static_cast<std::size_t>(k)] / total, std::move(psi)});
    const auto kk = static_cast<double>(k);
    RealVector next = (std::sqrt(2.0 / (kk + 1.0)) * u.array() * cur.array() -
                       std::sqrt(kk / (kk + 1.0)) * prev.array())
                          .matrix();
    prev = std::move(cur);
    cur = std::move(next);
  }
  // rounding can push the weight sum off 1 by a few ulps
  double sum = 0.0;
  for (const auto& m : members) sum += m.weight;
  for (auto& m : members) m.weight /= sum;
  return DensityEnsemble(std::move(members));
}

DensityEnsemble CoherentMixture::ensemble(const PositionGrid& grid) const {
  std::vector<EnsembleMember> members;
  members.reserve(centres.size());
  for (const auto& c : centres) members.push_back({c.mass, coherent_state(c.x, c.p, eps, grid)});
  return DensityEnsemble(std::move(members));
}

GridFunction CoherentMixture::wigner_cell_average(const PhaseGrid& grid) const {
  const auto m = static_cast<Index>(centres.size());
  const double sigma = std::sqrt(eps / 2.0);
  auto factors = [&](const PositionGrid& axis, bool use_x) {
    Eigen::MatrixXd f(axis.size(), m);
    const double h = axis.spacing();
    for (Index c = 0; c < m; ++c) {
      const double mu = use_x ? centres[static_cast<std::size_t>(c)].x : centres[static_cast<std::size_t>(c)].p;
      for (Index i = 0; i < axis.size(); ++i) {
        const double a = (axis.node(i) - 0.5 * h - mu) / sigma;
        const double b = (axis.node(i) + 0.5 * h - mu) / sigma;
        f(i, c) = (normal_cdf(b) - normal_cdf(a)) / h;
      }
    }
    return f;
  };
  const Eigen::MatrixXd fx = factors(grid.x, true);
  const Eigen::MatrixXd fp = factors(grid.p, false);
  RealVector w(m);
  for (Index c = 0; c < m; ++c) w[c] = centres[static_cast<std::size_t>(c)].mass;
  GridFunction out{grid, RealArray2()};
  out.values = (fx * w.asDiagonal() * fp.transpose()).array();
  return out;
}

// ---- concentrating profile

namespace {

constexpr std::array<double, 8> kGaussNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                               0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                 0.2223810344533745, 0.1012285362903763};

template <class F>
double composite_gauss(F&& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double acc = 0.0;
  for (int s = 0; s < panels; ++s) {
    const double mid = a + (s + 0.5) * h;
    for (std::size_t g = 0; g < kGaussNodes.size(); ++g) acc += kGaussWeights[g] * f(mid + 0.5 * h * kGaussNodes[g]);
  }
  return 0.5 * h * acc;
}

double unit_bump(double r2) { return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0; }

// int over the chord {u fixed} of the unit bump
double chord_integral(double u) {
  const double c2 = 1.0 - u * u;
  if (c2 <= 0.0) return 0.0;
  const double c = std::sqrt(c2);
  return c * composite_gauss([&](double t) { return unit_bump(u * u + c2 * t * t); }, -1.0, 1.0, 32);
}

double bump_integral() {
  static const double total = composite_gauss(chord_integral, -1.0, 1.0, 64);
  return total;
}

// fraction of the unit bump's mass in {u > -a}
double right_fraction(double a) {
  if (a >= 1.0) return 1.0;
  if (a <= -1.0) return 0.0;
  return composite_gauss(chord_integral, -a, 1.0, 64) / bump_integral();
}

}  // namespace

void ConcentratingProfile::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigurationError("ConcentratingProfile: theta must lie in (0,1)");
  if (!(anisotropy_x > 0.0 && anisotropy_x <= 1.0 && anisotropy_k > 0.0 && anisotropy_k <= 1.0)) {
    throw ConfigurationError("ConcentratingProfile: anisotropy factors must lie in (0,1]");
  }
  if (!(std::hypot(center_x, center_k) < 1.0)) throw ConfigurationError("ConcentratingProfile: center outside disk");
}

double ConcentratingProfile::lambda(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigurationError("ConcentratingProfile: eps must lie in (0,1)");
  return std::log(1.0 / eps);
}

double ConcentratingProfile::w(double x, double k) const {
  const double rho = 1.0 - std::hypot(center_x, center_k);
  const double u = (x - center_x) / (rho * anisotropy_x);
  const double v = (k - center_k) / (rho * anisotropy_k);
  return unit_bump(u * u + v * v) / (bump_integral() * rho * rho * anisotropy_x * anisotropy_k);
}

double ConcentratingProfile::scaled(double x, double k, double eps) const {
  const double lam = lambda(eps);
  return std::pow(lam, a_mass()) * w(std::pow(lam, a_x()) * x, std::pow(lam, a_k()) * k);
}

double ConcentratingProfile::c_plus() const {
  const double rho = 1.0 - std::hypot(center_x, center_k);
  return right_fraction(center_x / (rho * anisotropy_x));
}

double ConcentratingProfile::c_minus() const { return 1.0 - c_plus(); }

std::pair<double, double> ConcentratingProfile::support(double eps) const {
  const double lam = lambda(eps);
  return {std::pow(lam, -a_x()), std::pow(lam, -a_k())};
}

double bump_shift_for_mass(double target) {
  if (!(target > 0.0 && target < 1.0)) throw ConfigurationError("bump_shift_for_mass: target must lie in (0,1)");
  // c+ = F(s / (1 - |s|)) with F increasing; solve F(a) = target, then s = a / (1 + |a|)
  double lo = -1.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (right_fraction(mid) < target ? lo : hi) = mid;
  }
  const double a = 0.5 * (lo + hi);
  return a / (1.0 + std::abs(a));
}

ConcentratingData concentrating_wigner_data(const ConcentratingProfile& profile, double eps, const PhaseGrid& raster,
                                            const PositionGrid& quantum_grid, int lattice_n) {
  profile.validate();
  if (lattice_n < 2) throw ConfigurationError("concentrating_wigner_data: lattice_n must be >= 2");
  const auto [sx, sk] = profile.support(eps);
  const double need_dx = sx / 16.0;
  const double need_dp = sk / 16.0;
  if (!(raster.x.spacing() < need_dx) || !(raster.p.spacing() < need_dp)) {
    auto required = [](double length, double h) {
      Index n = 8;
      while (length / static_cast<double>(n) >= h) n *= 2;
      return n;
    };
    throw ConfigurationError("concentrating_wigner_data: raster does not resolve the datum; need at least " +
                             std::to_string(required(raster.x.length(), need_dx)) + " x-nodes and " +
                             std::to_string(required(raster.p.length(), need_dp)) + " p-nodes");
  }
  if (raster.x.min() > -sx || raster.x.max() < sx || raster.p.min() > -sk || raster.p.max() < sk) {
    throw ConfigurationError("concentrating_wigner_data: raster does not cover the support");
  }
  GridFunction target{raster, RealArray2(raster.x.size(), raster.p.size())};
  for (Index i = 0; i < raster.x.size(); ++i) {
    for (Index j = 0; j < raster.p.size(); ++j) target.values(i, j) = profile.scaled(raster.x.node(i), raster.p.node(j), eps);
  }

  CoherentMixture mixture{eps, {}};
  double peak = 0.0;
  std::vector<Atom> candidates;
  for (int a = 0; a < lattice_n; ++a) {
    const double x = -sx + (a + 0.5) * 2.0 * sx / lattice_n;
    for (int b = 0; b < lattice_n; ++b) {
      const double p = -sk + (b + 0.5) * 2.0 * sk / lattice_n;
      const double v = profile.scaled(x, p, eps);
      peak = std::max(peak, v);
      candidates.push_back({v, x, p});
    }
  }
  double total = 0.0;
  for (const auto& c : candidates) {
    if (c.mass > 1e-14 * peak) {
      mixture.centres.push_back(c);
      total += c.mass;
    }
  }
  for (auto& c : mixture.centres) c.mass /= total;

  ConcentratingData out{PhaseSpaceDensity(target, DensityTag::Wigner), mixture, mixture.ensemble(quantum_grid)};
  const GridFunction realized = mixture.wigner_cell_average(raster);
  out.realization_gap = std::sqrt(raster.cell_area() * (realized.values - target.values).square().sum());
  out.target_mass = raster.cell_area() * target.values.sum();
  out.c_plus = profile.c_plus();
  out.c_minus = profile.c_minus();
  return out;
}

// ---- random families

void RandomFamilySpec::validate() const {
  if (samples < 1) throw ConfigurationError("RandomFamilySpec: need at least one sample");
  if (law != LawKind::PointMass && !(sigma_x > 0.0 && sigma_p > 0.0)) {
    throw ConfigurationError("RandomFamilySpec: law widths must be positive");
  }
}

double RandomFamilySpec::density(double x, double p) const {
  const double dx = x - mean_x;
  const double dp = p - mean_p;
  switch (law) {
    case LawKind::Gaussian:
      return std::exp(-0.5 * (dx * dx / (sigma_x * sigma_x) + dp * dp / (sigma_p * sigma_p))) /
             (2.0 * std::numbers::pi * sigma_x * sigma_p);
    case LawKind::UniformBox:
      return (std::abs(dx) <= sigma_x && std::abs(dp) <= sigma_p) ? 1.0 / (4.0 * sigma_x * sigma_p) : 0.0;
    case LawKind::PointMass:
      break;
  }
  return (dx == 0.0 && dp == 0.0) ? std::numeric_limits<double>::infinity() : 0.0;
}

std::vector<Atom> sample_phase_points(const RandomFamilySpec& spec) {
  spec.validate();
  std::vector<Atom> points;
  points.reserve(static_cast<std::size_t>(spec.samples));
  const double mass = 1.0 / static_cast<double>(spec.samples);
  for (Index i = 0; i < spec.samples; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed & 0xffffffffu), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 gen(seq);
    double x = spec.mean_x;
    double p = spec.mean_p;
    if (spec.law == LawKind::Gaussian) {
      std::normal_distribution<double> normal(0.0, 1.0);
      x += spec.sigma_x * normal(gen);
      p += spec.sigma_p * normal(gen);
    } else if (spec.law == LawKind::UniformBox) {
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      x += spec.sigma_x * unit(gen);
      p += spec.sigma_p * unit(gen);
    }
    points.push_back({mass, x, p});
  }
  return points;
}

std::vector<FamilyMember> sample_random_family(const RandomFamilySpec& spec, double eps, const PositionGrid& grid) {
  std::vector<FamilyMember> family;
  for (const auto& pt : sample_phase_points(spec)) family.push_back({pt, coherent_state(pt.x, pt.p, eps, grid)});
  return family;
}

double check_epsn_operator_bound(const std::vector<EnsembleMember>& family, double eps) {
  if (family.empty()) throw ConfigurationError("check_epsn_operator_bound: empty family");
  if (!(eps > 0.0)) throw ConfigurationError("check_epsn_operator_bound: eps must be positive");
  double total = 0.0;
  for (const auto& m : family) {
    if (!(m.weight >= 0.0)) throw ConfigurationError("check_epsn_operator_bound: negative weight");
    total += m.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigurationError("check_epsn_operator_bound: weights must sum to 1");
  const auto m = static_cast<Index>(family.size());
  const auto& grid = family.front().state.grid;
  Eigen::MatrixXcd psi(grid.size(), m);
  for (Index i = 0; i < m; ++i) {
    const auto& member = family[static_cast<std::size_t>(i)];
    if (!(member.state.grid == grid)) throw ShapeError("check_epsn_operator_bound: members on different grids");
    psi.col(i) = std::sqrt(member.weight) * member.state.values;
  }
  // nonzero spectrum of sum w_i |psi_i><psi_i| equals that of the weighted Gram matrix
  const Eigen::MatrixXcd gram = grid.spacing() * (psi.adjoint() * psi);
  // block power iteration with Rayleigh-Ritz; a block resolves clustered top eigenvalues
  const Index block = std::min<Index>(m, 16);
  Eigen::MatrixXcd v(m, block);
  for (Index i = 0; i < m; ++i) {
    for (Index b = 0; b < block; ++b) v(i, b) = std::cos(0.37 * static_cast<double>((i + 1) * (b + 1)));
  }
  double value = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(gram * v);
    v = qr.householderQ() * Eigen::MatrixXcd::Identity(m, block);
    const Eigen::MatrixXcd small = v.adjoint() * gram * v;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ritz(small);
    const double next = ritz.eigenvalues()[block - 1];
    if (!(next > 0.0)) return 0.0;
    if (it > 0 && std::abs(next - value) <= 1e-12 * next) return next / eps;
    value = next;
  }
  throw NumericalError("check_epsn_operator_bound: power iteration did not converge in 1000 steps");
}

nlohmann::json to_json(const RandomFamilySpec& spec, double eps) {
  const char* law = spec.law == LawKind::Gaussian ? "gaussian" : spec.law == LawKind::UniformBox ? "uniform_box" : "point_mass";
  return {{"seed", spec.seed},
          {"law", law},
          {"mean", {spec.mean_x, spec.mean_p}},
          {"widths", {spec.sigma_x, spec.sigma_p}},
          {"M", spec.samples},
          {"eps", eps},
          {"coherent_width", std::sqrt(eps / 2.0)}};
}

}  // namespace roughsc
