#include "roughsc/metrics.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace roughsc {

void WeakMetricConfig::validate() const {
  if (!(frequency_cutoff > 0.0)) throw ConfigurationError("WeakMetricConfig: cutoff must be positive");
  if (!(gaussian_weight_sigma > 0.0)) throw ConfigurationError("WeakMetricConfig: sigma must be positive");
  if (nodes < 3) throw ConfigurationError("WeakMetricConfig: need at least 3 nodes");
}

RealVector WeakMetricConfig::frequencies() const {
  return RealVector::LinSpaced(nodes, -frequency_cutoff, frequency_cutoff);
}

namespace {

RealVector trapezoid_weights(const WeakMetricConfig& cfg) {
  const RealVector f = cfg.frequencies();
  const double h = 2.0 * cfg.frequency_cutoff / static_cast<double>(cfg.nodes - 1);
  RealVector w = (-0.5 * f.array().square() / (cfg.gaussian_weight_sigma * cfg.gaussian_weight_sigma)).exp() * h;
  w[0] *= 0.5;
  w[cfg.nodes - 1] *= 0.5;
  return w;
}

Eigen::MatrixXcd phase_matrix(const RealVector& freq, const RealVector& nodes) {
  // E(a, i) = exp(-i freq[a] nodes[i])
  const Eigen::MatrixXd arg = freq * nodes.transpose();
  Eigen::MatrixXcd e(arg.rows(), arg.cols());
  e.real() = arg.array().cos().matrix();
  e.imag() = -arg.array().sin().matrix();
  return e;
}

}  // namespace

double WeakMetricConfig::weight_mass() const {
  const RealVector w = trapezoid_weights(*this);
  return w.sum() * w.sum();
}

CharacteristicSamples characteristic(const PhaseSpaceDensity& mu, const WeakMetricConfig& cfg) {
  cfg.validate();
  const double mass = mu.total_mass();
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ConfigurationError("weak_distance: input has no positive mass");
  const RealVector f = cfg.frequencies();
  CharacteristicSamples out;
  out.raw_mass = mass;
  if (mu.is_atomic()) {
    out.values = Eigen::MatrixXcd::Zero(f.size(), f.size());
    for (const auto& atom : mu.atomic().atoms) {
      const Eigen::VectorXcd ex = phase_matrix(f, RealVector::Constant(1, atom.x)).col(0);
      const Eigen::VectorXcd ep = phase_matrix(f, RealVector::Constant(1, atom.p)).col(0);
      out.values.noalias() += (atom.mass / mass) * ex * ep.transpose();
    }
    return out;
  }
  const auto& g = mu.grid_function();
  const Eigen::MatrixXcd ex = phase_matrix(f, g.grid.x.nodes());
  const Eigen::MatrixXcd ep = phase_matrix(f, g.grid.p.nodes());
  const Eigen::MatrixXcd half = ex * g.values.matrix().cast<std::complex<double>>();
  out.values = (g.grid.cell_area() / mass) * half * ep.transpose();
  return out;
}

CharacteristicSamples characteristic(const DensityEnsemble& ensemble, bool husimi, const WeakMetricConfig& cfg) {
  cfg.validate();
  const double mass = ensemble.trace();
  if (!(mass > 0.0)) throw ConfigurationError("weak_distance: ensemble has zero trace");
  const RealVector f = cfg.frequencies();
  CharacteristicSamples out;
  out.raw_mass = mass;
  out.values = husimi ? husimi_characteristic(ensemble, f, f) : wigner_characteristic(ensemble, f, f);
  out.values /= mass;
  return out;
}

double weak_distance(const CharacteristicSamples& mu, const CharacteristicSamples& nu, const WeakMetricConfig& cfg) {
  cfg.validate();
  if (mu.values.rows() != cfg.nodes || mu.values.cols() != cfg.nodes || nu.values.rows() != cfg.nodes ||
      nu.values.cols() != cfg.nodes) {
    throw ShapeError("weak_distance: characteristic samples do not match the metric grid");
  }
  const RealVector w = trapezoid_weights(cfg);
  const Eigen::MatrixXd diff = (mu.values - nu.values).cwiseAbs();
  return w.dot(diff * w);
}

double weak_distance(const PhaseSpaceDensity& mu, const PhaseSpaceDensity& nu, const WeakMetricConfig& cfg) {
  return weak_distance(characteristic(mu, cfg), characteristic(nu, cfg), cfg);
}

double l2_distance(const PhaseSpaceDensity& a, const PhaseSpaceDensity& b) {
  const auto& ga = a.grid_function();
  const auto& gb = b.grid_function();
  if (!(ga.grid.x == gb.grid.x) || !(ga.grid.p == gb.grid.p)) throw ShapeError("l2_distance: grid mismatch");
  return std::sqrt(ga.grid.cell_area() * (ga.values - gb.values).square().sum());
}

RateFit fit_rate(const std::vector<double>& eps_values, const std::vector<double>& distances, Warnings* warnings) {
  if (eps_values.size() != distances.size()) throw ShapeError("fit_rate: ladder lengths differ");
  for (std::size_t i = 1; i < eps_values.size(); ++i) {
    if (!(eps_values[i] < eps_values[i - 1])) throw ConfigurationError("fit_rate: eps must be strictly decreasing");
  }
  RateFit fit;
  for (std::size_t i = 0; i < eps_values.size(); ++i) {
    if (distances[i] > 0.0 && std::isfinite(distances[i]) && eps_values[i] > 0.0) {
      fit.eps_values.push_back(eps_values[i]);
      fit.distances.push_back(distances[i]);
    } else {
      warn(warnings, "fit_rate: dropped point eps=" + std::to_string(eps_values[i]) +
                         " distance=" + std::to_string(distances[i]));
    }
  }
  if (fit.eps_values.size() < 3) throw ConfigurationError("fit_rate: fewer than 3 usable ladder points");
  const auto n = static_cast<Index>(fit.eps_values.size());
  RealVector lx(n);
  RealVector ly(n);
  for (Index i = 0; i < n; ++i) {
    lx[i] = std::log(fit.eps_values[static_cast<std::size_t>(i)]);
    ly[i] = std::log(fit.distances[static_cast<std::size_t>(i)]);
  }
  const double mx = lx.mean();
  const double my = ly.mean();
  const RealVector cx = lx.array() - mx;
  const RealVector cy = ly.array() - my;
  fit.fitted_slope = cx.dot(cy) / cx.squaredNorm();
  fit.intercept = my - fit.fitted_slope * mx;
  const double ss_tot = cy.squaredNorm();
  const double ss_res = (cy - fit.fitted_slope * cx).squaredNorm();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

nlohmann::json to_json(const RateFit& fit) {
  return {{"eps_values", fit.eps_values},
          {"distances", fit.distances},
          {"fitted_slope", fit.fitted_slope},
          {"intercept", fit.intercept},
          {"r_squared", fit.r_squared}};
}

RateFit rate_fit_from_json(const nlohmann::json& j) {
  RateFit fit;
  fit.eps_values = j.at("eps_values").get<std::vector<double>>();
  fit.distances = j.at("distances").get<std::vector<double>>();
  fit.fitted_slope = j.at("fitted_slope").get<double>();
  fit.intercept = j.value("intercept", 0.0);
  fit.r_squared = j.at("r_squared").get<double>();
  return fit;
}

void write_ladder_csv(const std::filesystem::path& path, const std::vector<double>& eps_values,
                      const std::vector<double>& distances) {
  if (eps_values.size() != distances.size()) throw ShapeError("write_ladder_csv: ladder lengths differ");
  std::ofstream out(path);
  if (!out) throw ConfigurationError("write_ladder_csv: cannot open " + path.string());
  out.precision(17);
  out << "eps,distance\n";
  for (std::size_t i = 0; i < eps_values.size(); ++i) out << eps_values[i] << ',' << distances[i] << '\n';
}

}  // namespace roughsc
