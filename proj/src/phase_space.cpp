#include "roughsc/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace roughsc {

PhaseSpaceDensity::PhaseSpaceDensity(GridFunction grid_function, DensityTag tag)
    : rep_(std::move(grid_function)), tag_(tag) {
  const auto& g = std::get<GridFunction>(rep_);
  if (g.values.rows() != g.grid.x.size() || g.values.cols() != g.grid.p.size()) {
    throw ShapeError("PhaseSpaceDensity: values do not match the phase grid");
  }
}

PhaseSpaceDensity::PhaseSpaceDensity(AtomicMeasure measure) : rep_(std::move(measure)), tag_(DensityTag::Generic) {
  for (const auto& a : std::get<AtomicMeasure>(rep_).atoms) {
    if (!(a.mass > 0.0)) throw ConfigurationError("AtomicMeasure: atom masses must be positive");
  }
}

const GridFunction& PhaseSpaceDensity::grid_function() const {
  if (const auto* g = std::get_if<GridFunction>(&rep_)) return *g;
  throw UnsupportedRepresentation("atomic measures have no density values");
}

GridFunction& PhaseSpaceDensity::grid_function() {
  if (auto* g = std::get_if<GridFunction>(&rep_)) return *g;
  throw UnsupportedRepresentation("atomic measures have no density values");
}

const AtomicMeasure& PhaseSpaceDensity::atomic() const {
  if (const auto* a = std::get_if<AtomicMeasure>(&rep_)) return *a;
  throw UnsupportedRepresentation("grid density is not an atomic measure");
}

double PhaseSpaceDensity::total_mass() const {
  if (const auto* g = std::get_if<GridFunction>(&rep_)) return g->grid.cell_area() * g->values.sum();
  double mass = 0.0;
  for (const auto& a : std::get<AtomicMeasure>(rep_).atoms) mass += a.mass;
  return mass;
}

PhaseGrid build_wigner_grid(const PositionGrid& x_grid, double eps) {
  if (!(eps > 0.0)) throw ConfigurationError("build_wigner_grid: eps must be positive");
  const double dp = std::numbers::pi * eps / x_grid.length();
  const auto half = static_cast<double>(x_grid.size() / 2);
  return PhaseGrid{x_grid, PositionGrid(x_grid.size(), -half * dp, half * dp)};
}

double wigner_momentum_window(const PositionGrid& x_grid, double eps) {
  return 0.5 * eps * x_grid.nyquist();
}

namespace {

struct WindowContent {
  double edge = 0.0;
  double outside = 0.0;
  double total = 0.0;
};

WindowContent window_content(const WaveFunction& state) {
  WindowContent c;
  c.edge = boundary_mass(state, 6.0 * std::sqrt(state.eps / 2.0));
  FftEngine fft;
  ComplexVector spectrum = state.values;
  fft.forward(spectrum);
  const RealVector k = state.grid.frequencies();
  const double k_max = 0.5 * state.grid.nyquist();
  for (Index j = 0; j < k.size(); ++j) {
    const double w = std::norm(spectrum[j]);
    c.total += w;
    if (std::abs(k[j]) >= k_max) c.outside += w;
  }
  return c;
}

void check_window(const WindowContent& c, const PositionGrid& grid, double eps, Warnings* warnings) {
  const double margin = 6.0 * std::sqrt(eps / 2.0);
  if (c.edge > 1e-10) {
    warn(warnings, "wigner: mass " + std::to_string(c.edge) + " within " + std::to_string(margin) +
                       " of the grid boundary (periodic wrap-around)");
  }
  if (c.total > 0.0 && c.outside / c.total > 1e-8) {
    throw ConfigurationError("wigner: momentum content beyond the Wigner window |p| < " +
                             std::to_string(wigner_momentum_window(grid, eps)) + " (fraction " +
                             std::to_string(c.outside / c.total) + "); refine the grid or increase eps");
  }
}

void validate_for_wigner(const WaveFunction& state, Warnings* warnings) {
  check_window(window_content(state), state.grid, state.eps, warnings);
}

/// Adds weight * psi(x_i + m dx) conj(psi(x_i - m dx)) into column i, row (m mod n).
void accumulate_correlation(const ComplexVector& psi, double weight, ComplexArray2& corr) {
  const Index n = psi.size();
  for (Index i = 0; i < n; ++i) {
    const Index reach = std::min(i, n - 1 - i);
    auto* col = corr.data() + i * n;
    col[0] += weight * std::norm(psi[i]);
    for (Index m = 1; m <= std::min(reach, n / 2 - 1); ++m) {
      const std::complex<double> c = weight * psi[i + m] * std::conj(psi[i - m]);
      col[m] += c;
      col[n - m] += std::conj(c);
    }
  }
}

PhaseSpaceDensity wigner_from_correlation(ComplexArray2& corr, const PositionGrid& x_grid, double eps) {
  const Index n = x_grid.size();
  const PhaseGrid grid = build_wigner_grid(x_grid, eps);
  const double dy = 2.0 * x_grid.spacing() / eps;
  const double scale = dy / (2.0 * std::numbers::pi);
  FftEngine fft;
  ComplexVector spectrum(n);
  RealArray2 values(n, n);
  for (Index i = 0; i < n; ++i) {
    fft.forward(spectrum.data(), corr.data() + i * n, n);
    for (Index j = 0; j < n; ++j) {
      const Index centered = j < n / 2 ? j + n / 2 : j - n / 2;
      values(i, centered) = scale * spectrum[j].real();
    }
  }
  return PhaseSpaceDensity(GridFunction{grid, std::move(values)}, DensityTag::Wigner);
}

}  // namespace

PhaseSpaceDensity wigner(const WaveFunction& state, Warnings* warnings) {
  validate_for_wigner(state, warnings);
  const Index n = state.grid.size();
  ComplexArray2 corr = ComplexArray2::Zero(n, n);
  accumulate_correlation(state.values, 1.0, corr);
  return wigner_from_correlation(corr, state.grid, state.eps);
}

PhaseSpaceDensity wigner_ensemble(const DensityEnsemble& ensemble, Warnings* warnings) {
  const Index n = ensemble.grid().size();
  ComplexArray2 corr = ComplexArray2::Zero(n, n);
  WindowContent total;
  for (const auto& m : ensemble.members()) {
    const WindowContent c = window_content(m.state);
    total.edge += m.weight * c.edge;
    total.outside += m.weight * c.outside / c.total;
    total.total += m.weight;
  }
  check_window(total, ensemble.grid(), ensemble.eps(), warnings);
  for (const auto& m : ensemble.members()) accumulate_correlation(m.state.values, m.weight, corr);
  return wigner_from_correlation(corr, ensemble.grid(), ensemble.eps());
}

PhaseSpaceDensity husimi(const PhaseSpaceDensity& w, double eps) {
  if (!(eps > 0.0)) throw ConfigurationError("husimi: eps must be positive");
  const GridFunction& g = w.grid_function();
  const Index nx = g.grid.x.size();
  const Index np = g.grid.p.size();
  ComplexArray2 a = g.values.cast<std::complex<double>>();
  FftEngine fft;
  fft.forward2d(a);
  const RealVector xi2 = g.grid.x.frequencies().array().square();
  const RealVector eta2 = g.grid.p.frequencies().array().square();
  const double norm = 1.0 / static_cast<double>(nx * np);
  for (Index j = 0; j < np; ++j) {
    for (Index i = 0; i < nx; ++i) a(i, j) *= norm * std::exp(-eps * (xi2[i] + eta2[j]));
  }
  fft.backward2d(a);
  return PhaseSpaceDensity(GridFunction{g.grid, a.real()}, DensityTag::Husimi);
}

double sup_norm(const PhaseSpaceDensity& w) { return w.grid_function().values.abs().maxCoeff(); }

double l2_norm(const PhaseSpaceDensity& w) {
  const auto& g = w.grid_function();
  return std::sqrt(g.grid.cell_area() * g.values.square().sum());
}

double min_value(const PhaseSpaceDensity& w) { return w.grid_function().values.minCoeff(); }

Marginals marginals(const PhaseSpaceDensity& w) {
  const auto& g = w.grid_function();
  return Marginals{(g.grid.p.spacing() * g.values.rowwise().sum()).matrix(),
                   (g.grid.x.spacing() * g.values.colwise().sum().transpose()).matrix()};
}

Eigen::MatrixXcd wigner_characteristic(const DensityEnsemble& ensemble, const Eigen::Ref<const RealVector>& xi,
                                       const Eigen::Ref<const RealVector>& eta) {
  const PositionGrid& grid = ensemble.grid();
  const double eps = ensemble.eps();
  const Index n = grid.size();
  const RealVector k = grid.frequencies();
  const double dx = grid.spacing();
  const std::complex<double> i_unit(0.0, 1.0);
  Eigen::MatrixXcd chi = Eigen::MatrixXcd::Zero(xi.size(), eta.size());
  FftEngine fft;
  ComplexVector spectrum(n);
  ComplexVector shifted(n);
  ComplexVector minus(n);
  ComplexVector plus(n);
  ComplexVector product(n);
  for (const auto& member : ensemble.members()) {
    spectrum = member.state.values;
    fft.forward(spectrum);
    for (Index b = 0; b < eta.size(); ++b) {
      const double s = 0.5 * eps * eta[b];
      // psi(x - s) and psi(x + s) by spectral translation
      shifted = (spectrum.array() * (-i_unit * s * k.array()).exp()).matrix();
      fft.backward(minus.data(), shifted.data(), n);
      shifted = (spectrum.array() * (i_unit * s * k.array()).exp()).matrix();
      fft.backward(plus.data(), shifted.data(), n);
      product = (minus.array() * plus.array().conjugate()).matrix() / static_cast<double>(n * n);
      const double peak = product.cwiseAbs().maxCoeff();
      if (peak == 0.0) continue;
      Index lo = 0;
      Index hi = n - 1;
      const double cut = 1e-18 * peak;
      while (lo < hi && std::abs(product[lo]) < cut) ++lo;
      while (hi > lo && std::abs(product[hi]) < cut) --hi;
      for (Index a = 0; a < xi.size(); ++a) {
        const std::complex<double> step = std::exp(-i_unit * xi[a] * dx);
        std::complex<double> phase = std::exp(-i_unit * xi[a] * grid.node(lo));
        std::complex<double> sum = 0.0;
        for (Index i = lo; i <= hi; ++i) {
          sum += product[i] * phase;
          phase *= step;
        }
        chi(a, b) += member.weight * dx * sum;
      }
    }
  }
  return chi;
}

Eigen::MatrixXcd husimi_characteristic(const DensityEnsemble& ensemble, const Eigen::Ref<const RealVector>& xi,
                                       const Eigen::Ref<const RealVector>& eta) {
  Eigen::MatrixXcd chi = wigner_characteristic(ensemble, xi, eta);
  const double eps = ensemble.eps();
  for (Index b = 0; b < eta.size(); ++b) {
    for (Index a = 0; a < xi.size(); ++a) chi(a, b) *= std::exp(-eps * (xi[a] * xi[a] + eta[b] * eta[b]));
  }
  return chi;
}

double husimi_half_line_mass(const DensityEnsemble& ensemble, double threshold, bool upper) {
  const PositionGrid& grid = ensemble.grid();
  const double width = std::sqrt(2.0 * ensemble.eps());
  RealVector tail(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const double z = (grid.node(i) - threshold) / width;
    tail[i] = 0.5 * std::erfc((upper ? -z : z) / std::numbers::sqrt2);
  }
  double mass = 0.0;
  for (const auto& m : ensemble.members()) {
    mass += m.weight * quadrature(m.state.density().cwiseProduct(tail), grid);
  }
  return mass;
}

double half_line_mass(const PhaseSpaceDensity& w, double threshold, bool upper) {
  if (w.is_atomic()) {
    double mass = 0.0;
    for (const auto& a : w.atomic().atoms) {
      if (upper ? a.x > threshold : a.x < threshold) mass += a.mass;
    }
    return mass;
  }
  const auto& g = w.grid_function();
  double mass = 0.0;
  for (Index i = 0; i < g.grid.x.size(); ++i) {
    const double x = g.grid.x.node(i);
    if (upper ? x > threshold : x < threshold) mass += g.values.row(i).sum();
  }
  return mass * g.grid.cell_area();
}

nlohmann::json to_json(const AtomicMeasure& measure) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : measure.atoms) atoms.push_back({{"mass", a.mass}, {"x", a.x}, {"p", a.p}});
  return {{"atoms", atoms}};
}

AtomicMeasure atomic_measure_from_json(const nlohmann::json& j) {
  AtomicMeasure m;
  try {
    for (const auto& a : j.at("atoms")) {
      m.atoms.push_back(Atom{a.at("mass").get<double>(), a.at("x").get<double>(), a.at("p").get<double>()});
      if (!(m.atoms.back().mass >= 0.0)) throw ConfigurationError("atomic measure: negative mass");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("atomic measure: ") + e.what());
  }
  return m;
}

void dump_density(const std::filesystem::path& path, const PhaseSpaceDensity& w) {
  write_grid(path, w.grid_function().values.matrix());
}

}  // namespace roughsc
