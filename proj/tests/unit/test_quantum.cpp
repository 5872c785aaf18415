#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "roughsc/initial_data.hpp"
#include "roughsc/quantum.hpp"

using namespace roughsc;

namespace {

double mean_x(const WaveFunction& s) {
  const RealVector rho = s.density();
  double m = 0.0;
  for (Index i = 0; i < rho.size(); ++i) m += s.grid.node(i) * rho[i];
  return m * s.grid.spacing();
}

double mean_p(const WaveFunction& s) {
  ComplexVector f = dft_forward(s.values);
  const RealVector k = s.grid.frequencies();
  double acc = 0.0;
  double norm = 0.0;
  for (Index i = 0; i < f.size(); ++i) {
    acc += std::norm(f[i]) * s.eps * k[i];
    norm += std::norm(f[i]);
  }
  return acc / norm;
}

double distance(const WaveFunction& a, const WaveFunction& b) {
  return std::sqrt(a.grid.spacing()) * (a.values - b.values).norm();
}

}  // namespace

TEST_CASE("free packet moves at the group velocity and keeps its norm") {
  const PositionGrid g(1024, -10.0, 10.0);
  const double eps = 0.05;
  WaveFunction psi = coherent_state(-2.0, 1.0, eps, g);
  SplitStepPropagator prop(g, eps, PotentialSpec::zero());
  prop.advance(psi, 2.0, 1e-2);
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  // alpha = 1/2: group velocity 2 alpha p0 = p0
  CHECK(mean_x(psi) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  // analytic width: sigma^2(t) = eps/2 (1 + t^2)
  const RealVector rho = psi.density();
  double var = 0.0;
  for (Index i = 0; i < rho.size(); ++i) var += std::pow(g.node(i) - mean_x(psi), 2) * rho[i];
  var *= g.spacing();
  CHECK(var == doctest::Approx(eps / 2.0 * (1.0 + 4.0)).epsilon(1e-8));
}

TEST_CASE("harmonic coherent state follows the classical rotation") {
  const PositionGrid g(512, -8.0, 8.0);
  const double eps = 0.05;
  const double x0 = 1.0;
  const double p0 = 0.5;
  WaveFunction psi = coherent_state(x0, p0, eps, g);
  SplitStepPropagator prop(g, eps, PotentialSpec::harmonic());
  double now = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    prop.advance(psi, t - now, 1e-3);
    now = t;
    CHECK(mean_x(psi) == doctest::Approx(x0 * std::cos(t) + p0 * std::sin(t)).epsilon(1e-6));
    CHECK(mean_p(psi) == doctest::Approx(-x0 * std::sin(t) + p0 * std::cos(t)).epsilon(1e-6));
  }
}

TEST_CASE("Strang splitting converges at second order") {
  const PositionGrid g(512, -8.0, 8.0);
  const double eps = 0.1;
  const auto pot = PotentialSpec::anharmonic(1.0, 0.1);
  const WaveFunction psi0 = coherent_state(-1.0, 0.5, eps, g);
  auto run = [&](double dt) {
    WaveFunction s = psi0;
    SplitStepPropagator(g, eps, pot).advance(s, 1.0, dt);
    return s;
  };
  const WaveFunction ref = run(1e-4);
  const double e1 = distance(run(4e-3), ref);
  const double e2 = distance(run(2e-3), ref);
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("time reversal and unitarity") {
  const PositionGrid g(512, -8.0, 8.0);
  const double eps = 0.05;
  const auto pot = PotentialSpec::rough_power(0.5);
  const WaveFunction psi0 = coherent_state(-1.0, 0.3, eps, g);
  WaveFunction psi = psi0;
  SplitStepPropagator prop(g, eps, pot);
  prop.advance(psi, 1.0, 1e-3);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-10);
  prop.advance(psi, -1.0, 1e-3);
  CHECK(distance(psi, psi0) < 1e-8);
}

TEST_CASE("advance lands on the requested time") {
  const PositionGrid g(256, -8.0, 8.0);
  const double eps = 0.1;
  WaveFunction a = coherent_state(0.5, 0.0, eps, g);
  WaveFunction b = a;
  SplitStepPropagator prop(g, eps, PotentialSpec::harmonic());
  prop.advance(a, 0.37, 0.1);
  prop.advance(b, 0.37, 0.37 / 4.0);
  CHECK(distance(a, b) < 1e-12);
}

TEST_CASE("propagate and propagate_ensemble agree for a single member") {
  const PositionGrid g(256, -8.0, 8.0);
  const double eps = 0.1;
  const WaveFunction psi = coherent_state(0.5, 0.0, eps, g);
  PropagatorConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_final = 0.5;
  const auto pot = PotentialSpec::anharmonic(1.0, 0.1);
  const WaveFunction a = propagate(psi, pot, cfg);
  const DensityEnsemble e = propagate_ensemble(DensityEnsemble::pure(psi), pot, cfg);
  CHECK(distance(a, e.members().front().state) == 0.0);
}

TEST_CASE("two orthogonal members evolve independently") {
  const PositionGrid g(512, -10.0, 10.0);
  const double eps = 0.05;
  const WaveFunction a = coherent_state(-3.0, 0.0, eps, g);
  const WaveFunction b = coherent_state(3.0, 0.0, eps, g);
  CHECK(std::abs(inner_product(a, b)) < 1e-12);
  PropagatorConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_final = 1.0;
  const DensityEnsemble e = propagate_ensemble(DensityEnsemble({{0.5, a}, {0.5, b}}), PotentialSpec::zero(), cfg);
  CHECK(e.trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(distance(e.members()[0].state, propagate(a, PotentialSpec::zero(), cfg)) == 0.0);
}

TEST_CASE("ensemble weights are validated") {
  const PositionGrid g(256, -8.0, 8.0);
  const WaveFunction a = coherent_state(0.0, 0.0, 0.1, g);
  CHECK_THROWS_AS(DensityEnsemble({{0.3, a}, {0.3, a}}), ConfigurationError);
  CHECK_THROWS_AS(DensityEnsemble({{-0.5, a}, {1.5, a}}), ConfigurationError);
  CHECK_THROWS_AS(DensityEnsemble(std::vector<EnsembleMember>{}), ConfigurationError);
}

TEST_CASE("harmonic ground state energy") {
  const PositionGrid g(256, -8.0, 8.0);
  const double eps = 0.1;
  const WaveFunction ground = coherent_state(0.0, 0.0, eps, g);
  const auto pot = PotentialSpec::harmonic();
  CHECK(energy(ground, pot) == doctest::Approx(eps / 2.0).epsilon(1e-10));
  CHECK(h2_energy(ground, pot) == doctest::Approx(eps * eps / 4.0).epsilon(1e-9));
  // (H + c)^2 = H^2 + 2cH + c^2
  const double c = 0.7;
  const auto shifted = PotentialSpec::custom("harmonic+c", [c](double x) { return 0.5 * x * x + c; },
                                             [](double x) { return x; });
  CHECK(h2_energy(ground, shifted) ==
        doctest::Approx(h2_energy(ground, pot) + 2.0 * c * energy(ground, pot) + c * c).epsilon(1e-9));
}

TEST_CASE("plane-wave-modulated packet has kinetic energy near p0^2/2") {
  const PositionGrid g(1024, -8.0, 8.0);
  const double eps = 0.02;
  const double p0 = 1.5;
  const WaveFunction psi = coherent_state(0.0, p0, eps, g);
  // <p^2>/2 = (p0^2 + eps/2)/2
  CHECK(energy(psi, PotentialSpec::zero()) == doctest::Approx(0.5 * (p0 * p0 + eps / 2.0)).epsilon(1e-10));
  // ||H psi||^2 -> (p0^2/2)^2 with O(eps) corrections
  CHECK(h2_energy(psi, PotentialSpec::zero()) == doctest::Approx(std::pow(0.5 * p0 * p0, 2)).epsilon(0.05));
}

TEST_CASE("boundary mass") {
  const PositionGrid g(256, -8.0, 8.0);
  CHECK(boundary_mass(coherent_state(0.0, 0.0, 0.1, g), 1.0) < 1e-100);
  WaveFunction s = coherent_state(0.0, 0.0, 0.1, g);
  s.values.setConstant(1.0 / 4.0);
  CHECK(boundary_mass(s, 1.0) == doctest::Approx(2.0 / 16.0).epsilon(0.05));
}

TEST_CASE("checkpoint round trip") {
  const PositionGrid g(128, -6.0, 6.0);
  const WaveFunction psi = coherent_state(0.5, -0.25, 0.1, g);
  PropagatorConfig cfg;
  cfg.t_final = 1.25;
  const auto prefix = std::filesystem::temp_directory_path() / "roughsc_ckpt";
  write_checkpoint(prefix, psi, 1.25, PotentialSpec::harmonic(), cfg);
  double t = 0.0;
  const WaveFunction back = read_checkpoint(prefix, &t);
  CHECK(t == 1.25);
  CHECK(back.eps == psi.eps);
  CHECK(back.grid == psi.grid);
  CHECK(back.values == psi.values);
  for (const char* ext : {".re.bin", ".im.bin", ".json"}) std::filesystem::remove(prefix.string() + ext);
}
