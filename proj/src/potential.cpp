#include "roughsc/potential.hpp"

#include "roughsc/hashing.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace roughsc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

PotentialSpec::PotentialSpec(Kind kind) : kind_(std::move(kind)) {
  if (const auto* rp = std::get_if<RoughPower>(&kind_)) {
    if (!(rp->theta > 0.0 && rp->theta < 1.0)) {
      throw ConfigurationError("RoughPower: theta must lie in (0,1)");
    }
    if (!(rp->core_radius > 0.0) || !(rp->quartic > 0.0)) {
      throw ConfigurationError("RoughPower: core_radius and quartic must be positive");
    }
  }
  if (const auto* c = std::get_if<Custom>(&kind_)) {
    if (!c->value) throw ConfigurationError("Custom potential needs a value function");
  }
}

PotentialSpec PotentialSpec::harmonic() { return PotentialSpec(Harmonic{}); }

PotentialSpec PotentialSpec::rough_power(double theta, double core_radius, double quartic) {
  return PotentialSpec(RoughPower{theta, core_radius, quartic});
}

PotentialSpec PotentialSpec::custom(std::string label, std::function<double(double)> value,
                                    std::function<double(double)> gradient) {
  return PotentialSpec(Custom{std::move(label), std::move(value), std::move(gradient)});
}

PotentialSpec PotentialSpec::zero() {
  return custom("zero", [](double) { return 0.0; }, [](double) { return 0.0; });
}

PotentialSpec PotentialSpec::constant(double c) {
  return custom("constant(" + format_double(c) + ")", [c](double) { return c; },
                [](double) { return 0.0; });
}

PotentialSpec PotentialSpec::gaussian(double amplitude, double width) {
  return custom(
      "gaussian(" + format_double(amplitude) + "," + format_double(width) + ")",
      [=](double x) { return amplitude * std::exp(-(x / width) * (x / width)); },
      [=](double x) {
        return -2.0 * x / (width * width) * amplitude * std::exp(-(x / width) * (x / width));
      });
}

PotentialSpec PotentialSpec::anharmonic(double a, double b) {
  return custom(
      "anharmonic(" + format_double(a) + "," + format_double(b) + ")",
      [=](double x) { return 0.5 * a * x * x + 0.25 * b * x * x * x * x; },
      [=](double x) { return a * x + b * x * x * x; });
}

PotentialSpec PotentialSpec::from_samples(const PositionGrid& grid, RealVector samples, std::string label) {
  if (samples.size() != grid.size()) throw ShapeError("from_samples: length does not match grid");
  auto segment = [grid](double x) {
    const double s = (x - grid.min()) / grid.spacing();
    const auto last = static_cast<double>(grid.size() - 2);
    const double base = std::clamp(std::floor(s), 0.0, last);
    return std::pair<Index, double>{static_cast<Index>(base), std::clamp(s - base, 0.0, 1.0)};
  };
  auto value = [segment, samples](double x) {
    const auto [i, f] = segment(x);
    return (1.0 - f) * samples[i] + f * samples[i + 1];
  };
  auto gradient = [segment, samples, dx = grid.spacing()](double x) {
    const auto [i, f] = segment(x);
    (void)f;
    return (samples[i + 1] - samples[i]) / dx;
  };
  return custom("samples:" + std::move(label), value, gradient);
}

double PotentialSpec::value(double x) const {
  return std::visit(overloaded{
                        [x](const Harmonic&) { return 0.5 * x * x; },
                        [x](const RoughPower& rp) {
                          const double ax = std::abs(x);
                          if (ax <= rp.core_radius) return -std::pow(ax, 1.0 + rp.theta);
                          const double s = ax - rp.core_radius;
                          return -std::pow(rp.core_radius, 1.0 + rp.theta) -
                                 (1.0 + rp.theta) * std::pow(rp.core_radius, rp.theta) * s +
                                 rp.quartic * s * s * s * s;
                        },
                        [x](const Custom& c) { return c.value(x); },
                    },
                    kind_);
}

double PotentialSpec::gradient(double x) const {
  return std::visit(overloaded{
                        [x](const Harmonic&) { return x; },
                        [x](const RoughPower& rp) {
                          const double ax = std::abs(x);
                          if (ax <= rp.core_radius) {
                            return -sign(x) * (1.0 + rp.theta) * std::pow(ax, rp.theta);
                          }
                          const double s = ax - rp.core_radius;
                          return sign(x) * (-(1.0 + rp.theta) * std::pow(rp.core_radius, rp.theta) +
                                            4.0 * rp.quartic * s * s * s);
                        },
                        [x](const Custom& c) {
                          if (c.gradient) return c.gradient(x);
                          const double h = 1e-6 * std::max(1.0, std::abs(x));
                          return (c.value(x + h) - c.value(x - h)) / (2.0 * h);
                        },
                    },
                    kind_);
}

std::optional<std::pair<double, double>> PotentialSpec::core_interval() const {
  if (const auto* rp = std::get_if<RoughPower>(&kind_)) {
    return std::pair{-rp->core_radius, rp->core_radius};
  }
  return std::nullopt;
}

std::string PotentialSpec::describe() const {
  return std::visit(overloaded{
                        [](const Harmonic&) { return std::string("harmonic"); },
                        [](const RoughPower& rp) {
                          return "rough_power(theta=" + format_double(rp.theta) +
                                 ",r=" + format_double(rp.core_radius) +
                                 ",q=" + format_double(rp.quartic) + ")";
                        },
                        [](const Custom& c) { return "custom:" + c.label; },
                    },
                    kind_);
}

std::string PotentialSpec::hash() const { return fnv1a_hex(describe()); }

RealVector evaluate(const PotentialSpec& pot, const PositionGrid& grid) {
  if (const auto core = pot.core_interval()) {
    if (core->first < grid.min() || core->second > grid.max()) {
      throw ConfigurationError("evaluate: core interval of " + pot.describe() +
                               " exceeds the grid domain");
    }
  }
  RealVector v(grid.size());
  for (Index i = 0; i < grid.size(); ++i) v[i] = pot.value(grid.node(i));
  return v;
}

RealVector evaluate_gradient(const PotentialSpec& pot, const PositionGrid& grid) {
  RealVector g(grid.size());
  for (Index i = 0; i < grid.size(); ++i) g[i] = pot.gradient(grid.node(i));
  return g;
}

RealVector heat_smooth(const Eigen::Ref<const RealVector>& samples, double eps, const PositionGrid& grid) {
  if (samples.size() != grid.size()) throw ShapeError("heat_smooth: length does not match grid");
  if (!(eps >= 0.0)) throw ConfigurationError("heat_smooth: eps must be non-negative");
  if (eps == 0.0) return samples;
  const RealVector symbol = (-eps * grid.frequencies().array().square()).exp().matrix();
  return apply_fourier_multiplier(samples, symbol);
}

RealVector mollify(const PotentialSpec& pot, double eps, const PositionGrid& grid) {
  if (!(eps > 0.0)) throw ConfigurationError("mollify: eps must be positive");
  return heat_smooth(evaluate(pot, grid), eps, grid);
}

RealVector mollified_gradient(const PotentialSpec& pot, double eps, const PositionGrid& grid) {
  return heat_smooth(evaluate_gradient(pot, grid), eps, grid);
}

bool FourierConditionReport::all_pass() const {
  return integrability_passes && std::all_of(passes.begin(), passes.end(), [](bool b) { return b; });
}

namespace {

double smooth_transition(double s) {
  // C-infinity step from 1 (s <= 0) to 0 (s >= 1)
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - s));
  const double b = std::exp(-1.0 / s);
  return a / (a + b);
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return 0.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

FourierConditionReport check_fourier_conditions(const PotentialSpec& pot, const PositionGrid& grid,
                                                double theta, const FourierCheckOptions& options) {
  return check_fourier_conditions(evaluate(pot, grid), grid, theta, options);
}

FourierConditionReport check_fourier_conditions(const Eigen::Ref<const RealVector>& samples,
                                                const PositionGrid& grid, double theta,
                                                const FourierCheckOptions& options) {
  if (samples.size() != grid.size()) throw ShapeError("check_fourier_conditions: length mismatch");
  if (!(theta > 0.0 && theta < 1.0)) {
    throw ConfigurationError("check_fourier_conditions: theta must lie in (0,1)");
  }
  FourierConditionReport report;
  report.theta_used = theta;
  report.slack = options.slack;

  RealVector f = samples;
  if (options.support_fraction > options.flat_fraction) {
    const double center = 0.5 * (grid.min() + grid.max());
    const double half = 0.5 * grid.length();
    for (Index i = 0; i < grid.size(); ++i) {
      const double u = std::abs(grid.node(i) - center) / half;
      f[i] *= smooth_transition((u - options.flat_fraction) /
                                (options.support_fraction - options.flat_fraction));
    }
  }

  FftEngine fft;
  ComplexVector c = f.cast<std::complex<double>>();
  fft.forward(c);
  const RealVector modulus = grid.spacing() * c.cwiseAbs();
  const RealVector k = grid.frequencies().cwiseAbs();
  const double dk = grid.frequency_spacing();

  const int j_lo = static_cast<int>(std::ceil(std::log2(2.0 * dk)));
  const double top = 0.5 * grid.nyquist();
  for (int j = j_lo; std::ldexp(1.0, j + 1) <= top; ++j) {
    report.shells.emplace_back(std::ldexp(1.0, j), std::ldexp(1.0, j + 1));
  }
  const double band_top = report.shells.empty() ? top : report.shells.back().second;

  double top_shell_integrable = 0.0;
  for (Index i = 0; i < k.size(); ++i) {
    if (k[i] < band_top) {
      report.integrability_value += modulus[i] * k[i] * k[i] / (1.0 + k[i] * k[i]) * dk;
    }
    if (!report.shells.empty() && k[i] >= report.shells.back().first && k[i] < band_top) {
      top_shell_integrable += modulus[i] * k[i] * k[i] / (1.0 + k[i] * k[i]) * dk;
    }
  }
  report.integrability_passes =
      report.integrability_value == 0.0 || top_shell_integrable <= 0.1 * report.integrability_value;

  const std::size_t n_shells = report.shells.size();
  for (int m = 0; m < 3; ++m) {
    const double e = static_cast<double>(m) - 1.0 - theta;
    auto& integrals = report.shell_integrals[static_cast<std::size_t>(m)];
    auto& ratios = report.ratios[static_cast<std::size_t>(m)];
    integrals.assign(n_shells, 0.0);
    ratios.assign(n_shells, 0.0);
    for (std::size_t s = 0; s < n_shells; ++s) {
      const auto [a, b] = report.shells[s];
      double sum = 0.0;
      for (Index i = 0; i < k.size(); ++i) {
        if (k[i] >= a && k[i] < b) sum += modulus[i] * std::pow(k[i], m) * dk;
      }
      integrals[s] = sum;
      ratios[s] = sum / std::abs(std::pow(b, e) - std::pow(a, e));
    }

    std::vector<double> log_a;
    std::vector<double> log_i;
    double log_ratio_sum = 0.0;
    for (std::size_t s = 0; s < n_shells; ++s) {
      if (integrals[s] > 0.0) {
        log_a.push_back(std::log(report.shells[s].first));
        log_i.push_back(std::log(integrals[s]));
        log_ratio_sum += std::log(ratios[s]);
      }
    }
    const auto mi = static_cast<std::size_t>(m);
    report.fitted_C[mi] = log_a.empty() ? 0.0 : std::exp(log_ratio_sum / static_cast<double>(log_a.size()));
    report.fitted_exponents[mi] = least_squares_slope(log_a, log_i);

    // reference constant from the low-frequency half; high shells must not exceed it by more than slack
    double reference = report.fitted_C[mi];
    for (std::size_t s = 0; s < (n_shells + 1) / 2; ++s) reference = std::max(reference, ratios[s]);
    auto& shell_ok = report.shell_passes[mi];
    shell_ok.assign(n_shells, true);
    for (std::size_t s = 0; s < n_shells; ++s) {
      shell_ok[s] = ratios[s] <= options.slack * reference;
    }
    report.passes[mi] = std::all_of(shell_ok.begin(), shell_ok.end(), [](bool b) { return b; });
  }
  return report;
}

BvDiagnostic bv_gradient_diagnostic(const PotentialSpec& pot, const PositionGrid& grid) {
  const RealVector g = evaluate_gradient(pot, grid);
  BvDiagnostic d;
  for (Index i = 0; i + 1 < g.size(); ++i) d.total_variation += std::abs(g[i + 1] - g[i]);
  for (Index i = 0; i < g.size(); ++i) {
    d.growth_bound = std::max(d.growth_bound, std::abs(g[i]) / (1.0 + std::abs(grid.node(i))));
  }
  return d;
}

}  // namespace roughsc
