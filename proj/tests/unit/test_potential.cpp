#include <doctest.h>

#include <cmath>
#include <numbers>

#include "roughsc/potential.hpp"

using namespace roughsc;

TEST_CASE("potential values") {
  CHECK(PotentialSpec::harmonic().value(2.0) == doctest::Approx(2.0));
  const auto rough = PotentialSpec::rough_power(0.5);
  CHECK(rough.value(0.0) == 0.0);
  CHECK(rough.value(0.25) == doctest::Approx(-0.125).epsilon(1e-15));
  CHECK(rough.value(-0.25) == doctest::Approx(-0.125).epsilon(1e-15));
  CHECK(rough.gradient(0.0) == 0.0);
  CHECK(rough.gradient(0.25) == doctest::Approx(-1.5 * 0.5));
  CHECK(rough.gradient(-0.25) == doctest::Approx(1.5 * 0.5));
  CHECK(PotentialSpec::anharmonic(1.0, 0.1).value(2.0) == doctest::Approx(2.0 + 0.1 * 16.0 / 4.0));
  CHECK(PotentialSpec::zero().value(3.0) == 0.0);
  CHECK(PotentialSpec::constant(1.5).gradient(3.0) == 0.0);
}

TEST_CASE("rough tail is C1 at the core edge") {
  const auto rough = PotentialSpec::rough_power(0.3, 1.0, 1.0);
  const double h = 1e-7;
  CHECK(rough.value(1.0 - h) == doctest::Approx(rough.value(1.0 + h)).epsilon(1e-6));
  CHECK(rough.gradient(1.0 - h) == doctest::Approx(rough.gradient(1.0 + h)).epsilon(1e-5));
  // confining far out
  CHECK(rough.value(4.0) > 0.0);
  const auto core = rough.core_interval();
  REQUIRE(core.has_value());
  CHECK(core->first == -1.0);
  CHECK(core->second == 1.0);
  CHECK_FALSE(PotentialSpec::harmonic().core_interval().has_value());
}

TEST_CASE("custom potential falls back to finite differences") {
  const auto custom = PotentialSpec::custom("cubic", [](double x) { return x * x * x; });
  CHECK(custom.gradient(2.0) == doctest::Approx(12.0).epsilon(1e-6));
  CHECK(custom.describe().find("cubic") != std::string::npos);
}

TEST_CASE("hash is stable and parameter sensitive") {
  CHECK(PotentialSpec::rough_power(0.5).hash() == PotentialSpec::rough_power(0.5).hash());
  CHECK(PotentialSpec::rough_power(0.5).hash() != PotentialSpec::rough_power(0.3).hash());
  CHECK(PotentialSpec::rough_power(0.5).hash().size() == 16);
}

TEST_CASE("heat smoothing fixes constants") {
  const PositionGrid g(128, -5.0, 5.0);
  const RealVector v = mollify(PotentialSpec::constant(2.5), 0.3, g);
  CHECK((v.array() - 2.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("heat smoothing damps a cosine by exp(-eps k^2)") {
  const PositionGrid g(128, 0.0, 2.0 * std::numbers::pi);
  const double k = 3.0;
  const auto cosine = PotentialSpec::custom("cos", [k](double x) { return std::cos(k * x); });
  for (double eps : {0.01, 0.1}) {
    const RealVector v = mollify(cosine, eps, g);
    for (Index i = 0; i < g.size(); ++i) {
      CHECK(std::abs(v[i] - std::exp(-eps * k * k) * std::cos(k * g.node(i))) < 1e-12);
    }
  }
}

TEST_CASE("heat smoothing of a Gaussian matches the convolution formula") {
  // e^{eps d^2} exp(-x^2/w^2) = w/sqrt(w^2 + 4 eps) exp(-x^2/(w^2 + 4 eps))
  const PositionGrid g(512, -12.0, 12.0);
  const double w = 1.0;
  const auto gauss = PotentialSpec::gaussian(1.0, w);
  double previous = 1.0;
  for (double eps : {0.1, 0.05, 0.025}) {
    const RealVector v = mollify(gauss, eps, g);
    const double s = w * w + 4.0 * eps;
    double err = 0.0;
    double gap = 0.0;
    for (Index i = 0; i < g.size(); ++i) {
      const double x = g.node(i);
      err = std::max(err, std::abs(v[i] - w / std::sqrt(s) * std::exp(-x * x / s)));
      gap = std::max(gap, std::abs(v[i] - gauss.value(x)));
    }
    CHECK(err < 1e-12);
    // ||V~ - V|| ~ eps ||V''||, ||V''|| = 2
    CHECK(gap / eps == doctest::Approx(2.0).epsilon(0.25));
    CHECK(gap < previous);
    previous = gap;
  }
}

TEST_CASE("mollified gradient equals the derivative of the mollified potential") {
  const PositionGrid g(256, -8.0, 8.0);
  const auto gauss = PotentialSpec::gaussian(2.0, 1.5);
  const RealVector v = mollify(gauss, 0.05, g);
  const RealVector dv = mollified_gradient(gauss, 0.05, g);
  for (Index i = 1; i + 1 < g.size(); ++i) {
    CHECK(std::abs((v[i + 1] - v[i - 1]) / (2 * g.spacing()) - dv[i]) < 5e-3);
  }
}

TEST_CASE("evaluate refuses a core that does not fit") {
  CHECK_THROWS_AS(evaluate(PotentialSpec::rough_power(0.5, 2.0), PositionGrid(64, -1.0, 1.0)), ConfigurationError);
  CHECK_THROWS_AS(mollify(PotentialSpec::harmonic(), 0.0, PositionGrid(64, -1.0, 1.0)), ConfigurationError);
}

TEST_CASE("fourier shell conditions") {
  const PositionGrid g(4096, -8.0, 8.0);
  SUBCASE("rough power passes with decaying shells") {
    const auto r = check_fourier_conditions(PotentialSpec::rough_power(0.5), g, 0.5);
    CHECK(r.all_pass());
    CHECK(r.theta_used == 0.5);
    for (int m = 0; m < 3; ++m) CHECK(r.fitted_exponents[m] < 0.0);
  }
  SUBCASE("smooth potentials pass") {
    CHECK(check_fourier_conditions(PotentialSpec::harmonic(), g, 0.5).all_pass());
    CHECK(check_fourier_conditions(PotentialSpec::gaussian(1.0, 1.0), g, 0.5).all_pass());
    CHECK(check_fourier_conditions(PotentialSpec::anharmonic(1.0, 0.1), g, 0.5).all_pass());
  }
  SUBCASE("a jump in the potential fails") {
    const auto step = PotentialSpec::custom("step", [](double x) { return x > 0.0 ? 1.0 : 0.0; },
                                            [](double) { return 0.0; });
    CHECK_FALSE(check_fourier_conditions(step, g, 0.5).all_pass());
  }
}

TEST_CASE("bounded-variation diagnostics") {
  const PositionGrid g(256, -4.0, 4.0);
  const auto d = bv_gradient_diagnostic(PotentialSpec::harmonic(), g);
  CHECK(std::abs(d.total_variation - 8.0) <= g.spacing() + 1e-12);
  CHECK(d.growth_bound <= 1.0);

  // TV of the rough gradient on the core is 2 * 1.5 * r^{1/2}; converges as the grid refines
  double previous = 0.0;
  for (Index n : {256, 1024, 4096}) {
    const PositionGrid core(n, -1.0, 1.0);
    const double tv = bv_gradient_diagnostic(PotentialSpec::rough_power(0.5), core).total_variation;
    CHECK(std::abs(tv - 3.0) < 0.05);
    CHECK(tv >= previous - 1e-12);
    previous = tv;
  }

  const auto step = PotentialSpec::custom("ramp", [](double x) { return x > 0.0 ? x : 0.0; },
                                          [](double x) { return x > 0.0 ? 1.0 : 0.0; });
  CHECK(bv_gradient_diagnostic(step, g).total_variation == doctest::Approx(1.0));
}
