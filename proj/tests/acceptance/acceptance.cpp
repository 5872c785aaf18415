// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "roughsc/experiments.hpp"
#include "roughsc/phase_space.hpp"
#include "roughsc/quantum.hpp"

using namespace roughsc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

const fs::path kRoot = fs::current_path() / "acceptance_runs";

struct Verdict {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunManifest run_in(ExperimentConfig cfg, const std::string& dir) {
  const fs::path d = kRoot / dir;
  fs::remove_all(d);
  cfg.output_dir = d.string();
  return run_experiment(cfg);
}

double wave_distance(const WaveFunction& a, const WaveFunction& b) {
  return std::sqrt(a.grid.spacing()) * (a.values - b.values).norm();
}

WaveFunction normalized(WaveFunction s) {
  s.values /= s.norm();
  return s;
}

// ---- 1

void harmonic_exactness(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunManifest m = run_in(ExperimentConfig::defaults(ExperimentKind::HarmonicExact), "harmonic_exact");
  const double runtime = seconds_since(t0);
  const double err = m.records.at(0).at("final_error").get<double>();
  v.detail << "L2 error at pi/2 " << err << ", " << runtime << " s ";
  v.require(err < 1e-4, "error < 1e-4");
  v.require(runtime < 30.0, "runtime < 30 s");
}

// ---- 2

struct CorpusState {
  WaveFunction psi;
  bool coherent;
};

std::vector<CorpusState> corpus(const PositionGrid& g) {
  std::vector<CorpusState> out;
  const double coh[8][3] = {{0.0, 0.0, 0.2}, {1.0, -0.5, 0.2}, {-2.0, 1.0, 0.1}, {0.5, 0.5, 0.1},
                            {2.5, -1.0, 0.05}, {-1.0, 0.0, 0.05}, {0.0, 1.0, 0.025}, {1.5, -0.5, 0.025}};
  for (const auto& c : coh) out.push_back({coherent_state(c[0], c[1], c[2], g), true});
  for (double a : {1.0, 1.5}) {
    for (double eps : {0.1, 0.05}) {
      WaveFunction s = coherent_state(-a, 0.0, eps, g);
      s.values += coherent_state(a, 0.0, eps, g).values;
      out.push_back({normalized(s), false});
    }
  }
  // three-packet superpositions with complex amplitudes
  for (int k = 0; k < 4; ++k) {
    const double eps = k < 2 ? 0.1 : 0.05;
    WaveFunction s = coherent_state(-2.0 + 0.3 * k, 0.5, eps, g);
    s.values += std::polar(0.7, 1.1 * k) * coherent_state(0.4 * k, -0.3, eps, g).values;
    s.values += std::polar(0.4, -0.6 * k) * coherent_state(2.0, 0.2 * k, eps, g).values;
    out.push_back({normalized(s), false});
  }
  // squeezed Gaussians
  const double sq[4][4] = {{0.0, 0.0, 0.1, 0.25}, {1.0, 0.5, 0.1, 4.0}, {-0.5, -0.5, 0.05, 0.25}, {0.5, 0.0, 0.05, 4.0}};
  for (const auto& c : sq) {
    WaveFunction s = coherent_state(c[0], c[1], c[2], g);
    const double var = c[3] * c[2] / 2.0;
    for (Index i = 0; i < g.size(); ++i) {
      const double dx = g.node(i) - c[0];
      s.values[i] = std::exp(-dx * dx / (4.0 * var)) * std::polar(1.0, c[1] * g.node(i) / c[2]);
    }
    out.push_back({normalized(s), false});
  }
  return out;
}

void phase_space_identities(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const PositionGrid g(1024, -8.0, 8.0);
  double worst_mass = 0.0, worst_marginal = 0.0, worst_min = 0.0, worst_sup_ratio = 0.0, worst_coherent = 0.0;
  const auto states = corpus(g);
  for (const auto& s : states) {
    const double eps = s.psi.eps;
    const PhaseSpaceDensity w = wigner(s.psi);
    worst_mass = std::max(worst_mass, std::abs(w.total_mass() - 1.0));
    const Marginals mg = marginals(w);
    worst_marginal = std::max(worst_marginal, (mg.x - s.psi.density()).cwiseAbs().sum() * g.spacing());
    const PhaseSpaceDensity h = husimi(w, eps);
    worst_min = std::min(worst_min, min_value(h));
    const double sup = sup_norm(h);
    worst_sup_ratio = std::max(worst_sup_ratio, sup * eps);
    if (s.coherent) worst_coherent = std::max(worst_coherent, std::abs(sup * eps * 5.0 * kPi - 1.0));
  }
  const double runtime = seconds_since(t0);
  v.detail << states.size() << " states: mass " << worst_mass << ", marginal L1 " << worst_marginal
           << ", Husimi min " << worst_min << ", max sup*eps " << worst_sup_ratio << ", coherent rel "
           << worst_coherent << ", " << runtime << " s ";
  v.require(states.size() == 20, "20 states");
  v.require(worst_mass <= 1e-8, "mass");
  v.require(worst_marginal <= 1e-8, "x-marginal");
  v.require(worst_min >= -1e-9, "Husimi min");
  v.require(worst_sup_ratio < 1.0, "Husimi sup < 1/eps");
  v.require(worst_coherent <= 0.01, "coherent sup*eps");
  v.require(runtime < 60.0, "runtime < 60 s");
}

// ---- 3

void branch_atlas(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::BranchAtlas);
  c.dt = 1e-5;
  c.params = {{"thetas", {0.1, 0.3, 0.5, 0.7}}, {"shadow_start", 0.5}, {"shadow_end", 1.5},
              {"residual_tolerance", 1e-6}, {"shadow_tolerance", 1e-5}};
  const RunManifest m = run_in(c, "branch_atlas");
  const double runtime = seconds_since(t0);
  const double res = m.summary.at("worst_residual").get<double>();
  const double shadow = m.summary.at("worst_shadow_error").get<double>();
  v.detail << m.summary.at("branches") << " branches: residual " << res << ", shadow " << shadow << ", " << runtime
           << " s ";
  v.require(res < 1e-6, "residual");
  v.require(shadow < 1e-5, "shadow");
  v.require(runtime < 10.0, "runtime < 10 s");
}

// ---- 4

void concentration(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig even = ExperimentConfig::defaults(ExperimentKind::ConcentrationSplit);
  even.theta = 0.5;
  even.eps_ladder = {1e-2, 1e-3, 1e-4};
  even.params = {{"c_plus", 0.5}, {"times", {0.5, 1.0}}, {"mass_tolerance", 0.05}};
  const RunManifest a = run_in(even, "concentration_even");
  for (double t : {0.5, 1.0}) {
    std::vector<double> d;
    for (const auto& r : a.records)
      if (r.at("t").get<double>() == t) d.push_back(r.at("distance_husimi").get<double>());
    v.detail << "t=" << t << " distances";
    for (double x : d) v.detail << " " << x;
    v.detail << "; ";
    v.require(d.size() == 3 && strictly_decreasing(d), "decrease at t=" + std::to_string(t));
  }
  for (const auto& r : a.records) {
    if (r.at("eps").get<double>() != 1e-4) continue;
    const double right = r.at("right_mass").get<double>();
    const double left = r.at("left_mass").get<double>();
    v.detail << "masses " << right << "/" << left << "; ";
    v.require(std::abs(right - 0.5) <= 0.05 && std::abs(left - 0.5) <= 0.05, "even masses");
  }

  ExperimentConfig shifted = even;
  shifted.eps_ladder = {1e-4};
  shifted.params = {{"c_plus", 0.7}, {"times", {0.5, 1.0}}, {"mass_tolerance", 0.07}};
  const RunManifest b = run_in(shifted, "concentration_shifted");
  const double c_plus = b.summary.at("c_plus").get<double>();
  for (const auto& r : b.records) {
    const double right = r.at("right_mass").get<double>();
    v.detail << "shifted c+ " << c_plus << " right " << right << "; ";
    v.require(std::abs(right - c_plus) <= 0.07, "shifted mass");
  }
  v.require(std::abs(c_plus - 0.7) < 1e-6, "shifted quadrature");
  const double runtime = seconds_since(t0);
  v.detail << runtime << " s ";
  v.require(runtime < 900.0, "runtime < 15 min");
}

// ---- 5

void l2_rate(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunManifest m = run_in(ExperimentConfig::defaults(ExperimentKind::L2MollifiedRate), "l2_mollified_rate");
  const double runtime = seconds_since(t0);
  const json& fit = m.summary.at("rate_fit");
  const double slope = fit.at("fitted_slope").get<double>();
  const double r2 = fit.at("r_squared").get<double>();
  v.detail << "slope " << slope << ", r^2 " << r2 << ", printed kappa " << m.summary.at("printed_kappa") << " (recorded), "
           << runtime << " s ";
  v.require(m.summary.at("fourier_conditions").at("all_pass").get<bool>(), "Fourier conditions");
  v.require(fit.at("distances").size() == 4, "4-point ladder");
  v.require(slope > 0.0, "slope > 0");
  v.require(r2 > 0.9, "r^2 > 0.9");
  v.require(runtime < 1200.0, "runtime < 20 min");
}

// ---- 6

void weak_convergence(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunManifest m = run_in(ExperimentConfig::defaults(ExperimentKind::WeakConvergence), "weak_convergence");
  const double runtime = seconds_since(t0);
  for (const char* s : {"smooth", "rough_away"}) {
    const auto d = m.summary.at(s).at("distances").get<std::vector<double>>();
    v.detail << s << ":";
    for (double x : d) v.detail << " " << x;
    v.detail << "; ";
    v.require(d.size() >= 2 && strictly_decreasing(d), std::string(s) + " decrease");
  }
  v.detail << runtime << " s ";
  v.require(runtime < 1200.0, "runtime < 20 min");
}

// ---- 7

void random_family(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::RandomFamily);
  c.params["samples"] = 64;
  const RunManifest a = run_in(c, "random_family_a");
  run_in(c, "random_family_b");
  const double runtime = seconds_since(t0);
  std::vector<double> d;
  double worst_ratio = 0.0;
  for (const auto& r : a.records) {
    d.push_back(r.at("average_sup_distance").get<double>());
    worst_ratio = std::max(worst_ratio, r.at("operator_bound_ratio").get<double>());
    v.require(r.at("family").at("M") == 64, "M = 64");
  }
  bool identical = true;
  for (const char* f : {"random_family.csv", "random_ladder.csv", "family.json"}) {
    const std::string x = slurp(kRoot / "random_family_a" / f);
    identical = identical && !x.empty() && x == slurp(kRoot / "random_family_b" / f);
  }
  v.detail << "averaged distances";
  for (double x : d) v.detail << " " << x;
  v.detail << "; worst ratio " << worst_ratio << "; rerun identical " << (identical ? "yes" : "no") << ", " << runtime
           << " s ";
  v.require(worst_ratio <= 1.0, "operator bound ratio <= 1");
  v.require(strictly_decreasing(d), "decrease");
  v.require(identical, "byte-identical rerun");
  v.require(runtime < 1800.0, "runtime < 30 min");
}

// ---- 8

void infrastructure(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  ComplexVector c(1024);
  for (Index i = 0; i < c.size(); ++i) c[i] = {n01(rng), n01(rng)};
  const double roundtrip = (dft_inverse(dft_forward(c)) - c).cwiseAbs().maxCoeff();

  const PositionGrid g(512, -8.0, 8.0);
  const double eps = 0.05;
  const auto rough = PotentialSpec::rough_power(0.5);
  const WaveFunction psi0 = coherent_state(-1.0, 0.3, eps, g);
  WaveFunction psi = psi0;
  SplitStepPropagator prop(g, eps, rough);
  prop.advance(psi, 1.0, 1e-3);
  const double unitarity = std::abs(psi.norm() - 1.0);
  prop.advance(psi, -1.0, 1e-3);
  const double reversal = wave_distance(psi, psi0);

  const auto anh = PotentialSpec::anharmonic(1.0, 0.1);
  const WaveFunction phi0 = coherent_state(-1.0, 0.5, 0.1, g);
  auto run = [&](double dt) {
    WaveFunction s = phi0;
    SplitStepPropagator(g, 0.1, anh).advance(s, 1.0, dt);
    return s;
  };
  const WaveFunction ref = run(1e-4);
  const double order = std::log2(wave_distance(run(4e-3), ref) / wave_distance(run(2e-3), ref));

  const PhaseGrid pg{PositionGrid(256, -6.0, 6.0), PositionGrid(256, -6.0, 6.0)};
  GridFunction blob{pg, RealArray2(256, 256)};
  for (Index i = 0; i < 256; ++i)
    for (Index j = 0; j < 256; ++j) {
      const double dx = pg.x.node(i) - 0.5;
      const double dp = pg.p.node(j);
      blob.values(i, j) = std::exp(-(dx * dx + dp * dp) / 0.4) / (0.4 * kPi);
    }
  const PhaseSpaceDensity rho0(blob);
  const PhaseSpaceDensity rho1 = liouville_semi_lagrangian(rho0, anh, 0.0, 0.01, 1.0);
  const double drift = std::abs(rho1.total_mass() - rho0.total_mass());
  const double runtime = seconds_since(t0);

  v.detail << "DFT " << roundtrip << ", unitarity " << unitarity << ", reversal " << reversal << ", Strang order "
           << order << ", SL drift " << drift << ", " << runtime << " s ";
  v.require(roundtrip < 1e-12, "DFT round trip");
  v.require(unitarity < 1e-10, "unitarity");
  v.require(reversal < 1e-8, "time reversal");
  v.require(std::abs(order - 2.0) <= 0.2, "Strang order");
  v.require(drift < 1e-6, "SL mass drift");
  v.require(runtime < 120.0, "runtime < 2 min");
}

}  // namespace

int main() {
  fs::create_directories(kRoot);
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"harmonic exactness", harmonic_exactness},
      {"Wigner/Husimi identities on a 20-state corpus", phase_space_identities},
      {"branch atlas", branch_atlas},
      {"concentrating data split", concentration},
      {"L2 rate against mollified transport", l2_rate},
      {"Husimi weak convergence", weak_convergence},
      {"random family", random_family},
      {"infrastructure invariants", infrastructure},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      criteria[k].second(v);
    } catch (const std::exception& e) {
      v.passed = false;
      v.detail << "[exception: " << e.what() << "]";
    }
    std::cout << (v.passed ? "PASS " : "FAIL ") << (k + 1) << " " << criteria[k].first << ": " << v.detail.str()
              << std::endl;
    failed += !v.passed;
  }
  return failed == 0 ? 0 : 1;
}
