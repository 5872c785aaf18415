#include "roughsc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "roughsc/hashing.hpp"

#ifndef ROUGHSC_VERSION
#define ROUGHSC_VERSION "0.0.0"
#endif

namespace roughsc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<ExperimentKind, std::pair<std::string, std::string>>& kind_names() {
  static const std::map<ExperimentKind, std::pair<std::string, std::string>> names = {
      {ExperimentKind::HarmonicExact, {"harmonic_exact", "HarmonicExact"}},
      {ExperimentKind::WeakConvergence, {"weak_convergence", "WeakConvergence"}},
      {ExperimentKind::L2MollifiedRate, {"l2_mollified_rate", "L2MollifiedRate"}},
      {ExperimentKind::ConcentrationSplit, {"concentration_split", "ConcentrationSplit"}},
      {ExperimentKind::RandomFamily, {"random_family", "RandomFamily"}},
      {ExperimentKind::ConjectureProbe, {"conjecture_probe", "ConjectureProbe"}},
      {ExperimentKind::BranchAtlas, {"branch_atlas", "BranchAtlas"}},
  };
  return names;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string short_fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(ExperimentKind kind) { return kind_names().at(kind).first; }

ExperimentKind experiment_from_string(const std::string& name) {
  for (const auto& [kind, names] : kind_names()) {
    if (name == names.first || name == names.second) return kind;
  }
  if (name == "probe") return ExperimentKind::ConjectureProbe;
  throw ConfigurationError("unknown experiment '" + name + "'");
}

std::string code_version() { return std::string("roughsc ") + ROUGHSC_VERSION; }

// ---- configuration

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.eps_ladder = {0.2, 0.1, 0.05, 0.025};
  switch (kind) {
    case ExperimentKind::HarmonicExact:
      c.eps_ladder = {0.05};
      c.grid = GridSpec{1024, -8.0, 8.0};
      c.T = std::numbers::pi / 2.0;
      c.dt = 1e-3;
      break;
    case ExperimentKind::WeakConvergence:
      c.T = 1.0;
      c.dt = 2e-3;
      c.eps_mollify = {0.0};
      break;
    case ExperimentKind::L2MollifiedRate:
      c.T = 1.0;
      c.dt = 1e-3;
      break;
    case ExperimentKind::ConcentrationSplit:
      c.eps_ladder = {1e-2, 1e-3, 1e-4};
      c.T = 1.0;
      c.dt = 2e-3;
      break;
    case ExperimentKind::RandomFamily:
      c.eps_ladder = {0.2, 0.1, 0.07, 0.05};
      c.T = 1.0;
      c.dt = 2e-3;
      c.eps_mollify = {0.0};
      break;
    case ExperimentKind::ConjectureProbe:
      c.grid = GridSpec{1024, -8.0, 8.0};
      break;
    case ExperimentKind::BranchAtlas:
      c.eps_ladder = {};
      c.T = 3.0;
      c.dt = 1e-5;
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (experiment != ExperimentKind::BranchAtlas) {
    if (eps_ladder.empty()) throw ConfigurationError("config: eps_ladder is empty");
    for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
      if (!(eps_ladder[i] > 0.0 && eps_ladder[i] < 1.0)) {
        throw ConfigurationError("config: eps values must lie in (0,1)");
      }
      if (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1])) {
        throw ConfigurationError("config: eps_ladder must be strictly decreasing");
      }
    }
  }
  if (!(T > 0.0)) throw ConfigurationError("config: T must be positive");
  if (!(dt > 0.0)) throw ConfigurationError("config: dt must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigurationError("config: theta must lie in (0,1)");
  for (double m : eps_mollify) {
    if (!(m >= 0.0)) throw ConfigurationError("config: eps_mollify values must be non-negative");
  }
  if (grid && (grid->n_points < 8 || !is_power_of_two(grid->n_points) || !(grid->x_max > grid->x_min))) {
    throw ConfigurationError("config: grid needs a power-of-two n_points >= 8 and x_max > x_min");
  }
  if (!params.is_object()) throw ConfigurationError("config: params must be an object");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigurationError("config: top level must be an object");
    if (!j.contains("experiment")) throw ConfigurationError("config: missing 'experiment'");
    ExperimentConfig c = defaults(experiment_from_string(j.at("experiment").get<std::string>()));
    if (j.contains("eps_ladder")) c.eps_ladder = j.at("eps_ladder").get<std::vector<double>>();
    if (j.contains("theta")) c.theta = j.at("theta").get<double>();
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      c.grid = GridSpec{g.at("n_points").get<Index>(), g.at("x_min").get<double>(), g.at("x_max").get<double>()};
    }
    if (j.contains("T")) c.T = j.at("T").get<double>();
    if (j.contains("dt")) c.dt = j.at("dt").get<double>();
    if (j.contains("eps_mollify")) c.eps_mollify = j.at("eps_mollify").get<std::vector<double>>();
    if (j.contains("delta_growth")) c.delta_growth = j.at("delta_growth").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("dump_grids")) c.dump_grids = j.at("dump_grids").get<bool>();
    if (j.contains("params")) c.params = j.at("params");
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json j = {{"experiment", roughsc::to_string(experiment)},
            {"eps_ladder", eps_ladder},
            {"theta", theta},
            {"T", T},
            {"dt", dt},
            {"eps_mollify", eps_mollify},
            {"delta_growth", delta_growth},
            {"seed", seed},
            {"params", params}};
  if (grid) j["grid"] = {{"n_points", grid->n_points}, {"x_min", grid->x_min}, {"x_max", grid->x_max}};
  return j;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

bool RunManifest::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

json RunManifest::to_json() const {
  json asserts = json::array();
  for (const auto& a : assertions) asserts.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  return {{"experiment", experiment},
          {"config_hash", config_hash},
          {"code_version", code_version},
          {"config", config},
          {"records", records},
          {"summary", summary},
          {"assertions", asserts},
          {"passed", passed()},
          {"warnings", warnings},
          {"wall_clock_seconds", wall_clock_seconds}};
}

bool strictly_decreasing(const std::vector<double>& values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] < values[i - 1])) return false;
  }
  return true;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<double> row) {
  std::vector<std::string> text;
  text.reserve(row.size());
  for (double v : row) text.push_back(fmt(v));
  add_text(std::move(text));
}

void CsvTable::add_text(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw ShapeError("CsvTable: row width does not match header");
  rows_.push_back(std::move(row));
}

void CsvTable::write(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
}

// ---- shared helpers

namespace {

struct Outputs {
  std::vector<std::pair<std::string, CsvTable>> tables;
  std::vector<std::pair<std::string, json>> documents;
  std::vector<std::pair<std::string, PhaseSpaceDensity>> grids;
};

RunManifest start_manifest(const ExperimentConfig& cfg) {
  RunManifest m;
  m.experiment = to_string(cfg.experiment);
  m.config_hash = cfg.hash();
  m.code_version = code_version();
  m.config = cfg.to_json();
  return m;
}

void check(RunManifest& m, std::string name, bool ok, std::string detail) {
  m.assertions.push_back({std::move(name), ok, std::move(detail)});
}

void emit(const ExperimentConfig& cfg, RunManifest& m, const Outputs& out) {
  if (cfg.output_dir.empty()) return;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  for (const auto& [name, table] : out.tables) table.write(dir / name);
  for (const auto& [name, doc] : out.documents) {
    std::ofstream f(dir / name);
    f << doc.dump(2) << '\n';
  }
  if (cfg.dump_grids) {
    for (const auto& [name, g] : out.grids) dump_density(dir / name, g);
  }
  std::ofstream f(dir / "manifest.json");
  f << m.to_json().dump(2) << '\n';
}

Index next_pow2(double v) {
  Index n = 8;
  while (static_cast<double>(n) < v) n *= 2;
  return n;
}

/// Grid on [x_min, x_max] resolving momenta up to p_max at scale eps.
PositionGrid resolved_grid(const ExperimentConfig& cfg, double eps, double x_min, double x_max, double p_max,
                           Index n_min) {
  if (cfg.grid) return PositionGrid(cfg.grid->n_points, cfg.grid->x_min, cfg.grid->x_max);
  const double needed = (x_max - x_min) * p_max / (std::numbers::pi * eps);
  return PositionGrid(std::max(n_min, next_pow2(needed)), x_min, x_max);
}

/// Same, but sized so that the Wigner grid's momentum window reaches p_window.
PositionGrid wigner_resolved_grid(const ExperimentConfig& cfg, double eps, double x_min, double x_max,
                                  double p_window, Index n_min) {
  return resolved_grid(cfg, eps, x_min, x_max, 2.0 * p_window, n_min);
}

PotentialSpec potential_by_name(const std::string& name, double theta) {
  if (name == "harmonic") return PotentialSpec::harmonic();
  if (name == "rough") return PotentialSpec::rough_power(theta);
  if (name == "anharmonic") return PotentialSpec::anharmonic(1.0, 0.1);
  if (name == "zero") return PotentialSpec::zero();
  throw ConfigurationError("unknown potential '" + name + "'");
}

/// Lattice quadrature of the Gaussian with per-axis variance `variance` at (x0, p0).
ParticleCloud gaussian_particles(double x0, double p0, double variance, int per_axis) {
  const double s = std::sqrt(variance);
  const double h = 10.0 * s / per_axis;
  ParticleCloud cloud;
  double total = 0.0;
  for (int a = 0; a < per_axis; ++a) {
    const double u = -5.0 * s + (a + 0.5) * h;
    for (int b = 0; b < per_axis; ++b) {
      const double v = -5.0 * s + (b + 0.5) * h;
      const double w = std::exp(-0.5 * (u * u + v * v) / variance);
      cloud.particles.push_back({w, x0 + u, p0 + v});
      total += w;
    }
  }
  for (auto& a : cloud.particles) a.mass /= total;
  return cloud;
}

/// Evolves every member through increasing `times` (first may be 0) and calls
/// visit(time_index, member) at each.
void sweep_members(DensityEnsemble& ensemble, const PotentialSpec& pot, double dt, const std::vector<double>& times,
                   const std::function<void(std::size_t, const EnsembleMember&)>& visit) {
  SplitStepPropagator prop(ensemble.grid(), ensemble.eps(), pot);
  for (auto& member : ensemble.members()) {
    double now = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (times[k] != now) prop.advance(member.state, times[k] - now, dt);
      now = times[k];
      visit(k, member);
    }
  }
}

void resolution_warnings(const PositionGrid& grid, double eps, const PotentialSpec& pot, double dt, Warnings* w) {
  SplitStepPropagator prop(grid, eps, pot);
  const double kin = prop.kinetic_phase_per_step(dt);
  if (kin >= std::numbers::pi / 4.0) {
    warn(w, "eps=" + short_fmt(eps) + ": kinetic phase per step at Nyquist is " + short_fmt(kin) + " rad");
  }
}

std::vector<double> linspace_times(double t_end, int count) {
  std::vector<double> t;
  for (int k = 1; k <= count; ++k) t.push_back(t_end * k / count);
  return t;
}

double h2_seminorm_sum(const GridFunction& f) {
  // discrete sqrt(sum of squared L2 norms of f and its first and second differences)
  const auto& v = f.values;
  const double hx = f.grid.x.spacing();
  const double hp = f.grid.p.spacing();
  const Index nx = v.rows();
  const Index np = v.cols();
  double acc = v.square().sum();
  if (nx > 2 && np > 2) {
    acc += ((v.bottomRows(nx - 1) - v.topRows(nx - 1)) / hx).square().sum();
    acc += ((v.rightCols(np - 1) - v.leftCols(np - 1)) / hp).square().sum();
    acc += ((v.bottomRows(nx - 2) - 2.0 * v.middleRows(1, nx - 2) + v.topRows(nx - 2)) / (hx * hx)).square().sum();
    acc += ((v.rightCols(np - 2) - 2.0 * v.middleCols(1, np - 2) + v.leftCols(np - 2)) / (hp * hp)).square().sum();
  }
  return std::sqrt(acc * f.grid.cell_area());
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---- harmonic exactness

RunManifest run_harmonic_exact(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  RunManifest m = start_manifest(cfg);
  Outputs out;
  const double x0 = cfg.param("x0", 1.0);
  const double p0 = cfg.param("p0", 0.0);
  const int samples = cfg.param("samples", 8);
  const double tolerance = cfg.param("tolerance", 1e-4);
  const PotentialSpec pot = PotentialSpec::harmonic();
  CsvTable table({"eps", "t", "error"});
  for (double eps : cfg.eps_ladder) {
    const GridSpec gs = cfg.grid.value_or(GridSpec{});
    const PositionGrid grid(gs.n_points, gs.x_min, gs.x_max);
    resolution_warnings(grid, eps, pot, cfg.dt, &m.warnings);
    WaveFunction psi = coherent_state(x0, p0, eps, grid);
    const PhaseSpaceDensity w0 = wigner(psi, &m.warnings);
    const GridFunction& g0 = w0.grid_function();
    SplitStepPropagator prop(grid, eps, pot);
    double now = 0.0;
    double final_error = 0.0;
    double max_error = 0.0;
    for (const double t : linspace_times(cfg.T, samples)) {
      prop.advance(psi, t - now, cfg.dt);
      now = t;
      const PhaseSpaceDensity wt = wigner(psi, &m.warnings);
      GridFunction rotated{g0.grid, RealArray2(g0.values.rows(), g0.values.cols())};
      const double c = std::cos(t);
      const double s = std::sin(t);
      for (Index j = 0; j < g0.grid.p.size(); ++j) {
        const double p = g0.grid.p.node(j);
        for (Index i = 0; i < g0.grid.x.size(); ++i) {
          const double x = g0.grid.x.node(i);
          rotated.values(i, j) = bicubic_sample(g0, x * c - p * s, x * s + p * c, false);
        }
      }
      const double err = l2_distance(wt, PhaseSpaceDensity(rotated));
      table.add({eps, t, err});
      max_error = std::max(max_error, err);
      final_error = err;
      if (cfg.dump_grids) out.grids.emplace_back("wigner_eps" + short_fmt(eps) + "_t" + short_fmt(t) + ".bin", wt);
    }
    m.records.push_back({{"eps", eps}, {"final_error", final_error}, {"max_error", max_error}, {"t_final", cfg.T}});
    check(m, "harmonic L2 error at t=T below " + short_fmt(tolerance) + " (eps=" + short_fmt(eps) + ")",
          final_error < tolerance, "error " + fmt(final_error));
  }
  out.tables.emplace_back("harmonic_error.csv", table);
  m.wall_clock_seconds = elapsed(t_start);
  emit(cfg, m, out);
  return m;
}

// ---- conjecture probe

RunManifest run_conjecture_probe(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  RunManifest m = start_manifest(cfg);
  Outputs out;
  const std::string family = cfg.param<std::string>("family", "pure_coherent");
  const double side = std::sqrt(cfg.param("box_area", 4.0));
  const double members_scale = cfg.param("members_scale", 0.25);
  const double x0 = cfg.param("x0", 0.0);
  const double p0 = cfg.param("p0", 0.0);
  CsvTable table({"eps", "members", "sup", "sup_times_eps", "bound", "sup_times_2pi_eps"});
  for (double eps : cfg.eps_ladder) {
    const GridSpec gs = cfg.grid.value_or(GridSpec{});
    const PositionGrid grid(gs.n_points, gs.x_min, gs.x_max);
    std::vector<EnsembleMember> members;
    if (family == "pure_coherent") {
      members.push_back({1.0, coherent_state(x0, p0, eps, grid)});
    } else if (family == "box_mixture") {
      // M proportional to 1/eps on a square lattice covering the box
      const int per_axis = std::max(1, static_cast<int>(std::ceil(std::sqrt(members_scale * side * side / eps))));
      const double h = side / per_axis;
      const double w = 1.0 / (per_axis * per_axis);
      for (int a = 0; a < per_axis; ++a) {
        for (int b = 0; b < per_axis; ++b) {
          members.push_back(
              {w, coherent_state(x0 - side / 2 + (a + 0.5) * h, p0 - side / 2 + (b + 0.5) * h, eps, grid)});
        }
      }
    } else {
      throw ConfigurationError("conjecture_probe: unknown family '" + family + "'");
    }
    const DensityEnsemble ens(std::move(members));
    const PhaseSpaceDensity h = husimi(wigner_ensemble(ens, &m.warnings), eps);
    const double sup = sup_norm(h);
    table.add({eps, static_cast<double>(ens.size()), sup, sup * eps, 1.0 / eps, sup * 2.0 * std::numbers::pi * eps});
    m.records.push_back({{"eps", eps},
                         {"members", ens.size()},
                         {"sup", sup},
                         {"sup_times_eps", sup * eps},
                         {"bound", 1.0 / eps},
                         {"sup_times_2pi_eps", sup * 2.0 * std::numbers::pi * eps}});
    if (cfg.dump_grids) out.grids.emplace_back("husimi_eps" + short_fmt(eps) + ".bin", h);
  }
  m.summary = {{"family", family}};
  out.tables.emplace_back("probe.csv", table);
  m.wall_clock_seconds = elapsed(t_start);
  emit(cfg, m, out);
  return m;
}

// ---- branch atlas

RunManifest run_branch_atlas(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  RunManifest m = start_manifest(cfg);
  Outputs out;
  const auto thetas = cfg.param<std::vector<double>>("thetas", {cfg.theta});
  const auto delays = cfg.param<std::vector<double>>("delays", {0.0, 0.5, 1.0});
  const double t_max = cfg.T;
  const double residual_tol = cfg.param("residual_tolerance", 1e-6);
  const double shadow_tol = cfg.param("shadow_tolerance", 1e-5);
  const double shadow_start = cfg.param("shadow_start", 0.5);
  const double shadow_end = cfg.param("shadow_end", 1.5);
  const int path_points = cfg.param("path_points", 200);
  for (double th : thetas) {
    if (th >= 0.95) {
      throw ConfigurationError("branch_atlas: theta=" + fmt(th) + " >= 0.95 makes nu = 2/(1-theta) blow up");
    }
  }
  CsvTable paths({"branch", "t", "x", "p"});
  CsvTable shadows({"branch", "t", "x", "p", "x_closed_form", "p_closed_form"});
  CsvTable residuals({"branch", "theta", "t0", "sign", "position_residual", "momentum_residual", "shadow_error"});
  json family = json::array();
  int id = 0;
  double worst_residual = 0.0;
  double worst_shadow = 0.0;
  for (double th : thetas) {
    std::vector<BranchRequest> requests;
    for (double t0 : delays) {
      requests.push_back({BranchSign::Plus, t0});
      requests.push_back({BranchSign::Minus, t0});
    }
    requests.push_back({BranchSign::Rest, 0.0});
    const PotentialSpec pot = PotentialSpec::rough_power(th);
    for (const auto& b : branch_family(th, requests)) {
      family.push_back(to_json(b));
      std::vector<double> times;
      for (int k = 0; k <= path_points; ++k) {
        const double t = t_max * k / path_points;
        paths.add({static_cast<double>(id), t, b.position(t), b.momentum(t)});
        if (b.sign == BranchSign::Rest || t > b.t0 + 0.05) times.push_back(t);
      }
      const BranchResidual r = branch_residual(b, times);
      double shadow_err = 0.0;
      const double t1 = b.t0 + shadow_start;
      const double t2 = b.t0 + shadow_end;
      const double horizon = t2 - t1;
      const int every = std::max(1, static_cast<int>(std::lround(horizon / cfg.dt / 50)));
      const SampledPath sp = integrate_hamiltonian(b.position(t1), b.momentum(t1), pot, cfg.dt, horizon, every);
      for (std::size_t k = 0; k < sp.t.size(); ++k) {
        const double t = t1 + sp.t[k];
        shadows.add({static_cast<double>(id), t, sp.x[k], sp.p[k], b.position(t), b.momentum(t)});
      }
      const double xe = b.position(t2);
      shadow_err = b.sign == BranchSign::Rest ? std::abs(sp.x.back()) : std::abs(sp.x.back() - xe) / std::abs(xe);
      residuals.add_text({std::to_string(id), fmt(th), fmt(b.t0), to_string(b.sign), fmt(r.position_residual),
                          fmt(r.momentum_residual), fmt(shadow_err)});
      worst_residual = std::max({worst_residual, r.position_residual, r.momentum_residual});
      worst_shadow = std::max(worst_shadow, shadow_err);
      m.records.push_back({{"branch", id},
                           {"theta", th},
                           {"t0", b.t0},
                           {"sign", to_string(b.sign)},
                           {"position_residual", r.position_residual},
                           {"momentum_residual", r.momentum_residual},
                           {"shadow_error", shadow_err}});
      ++id;
    }
  }
  m.summary = {{"branches", id}, {"worst_residual", worst_residual}, {"worst_shadow_error", worst_shadow}};
  check(m, "branch ODE residuals below " + short_fmt(residual_tol), worst_residual < residual_tol,
        "worst " + fmt(worst_residual));
  check(m, "shadow trajectories within relative " + short_fmt(shadow_tol), worst_shadow < shadow_tol,
        "worst " + fmt(worst_shadow));
  out.tables.emplace_back("branch_paths.csv", paths);
  out.tables.emplace_back("shadow_paths.csv", shadows);
  out.tables.emplace_back("branch_residuals.csv", residuals);
  out.documents.emplace_back("branches.json", json{{"branches", family}});
  m.wall_clock_seconds = elapsed(t_start);
  emit(cfg, m, out);
  return m;
}

// ---- concentration split

RunManifest run_concentration_split(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  RunManifest m = start_manifest(cfg);
  Outputs out;
  const double target_c_plus = cfg.param("c_plus", 0.5);
  const auto times = cfg.param<std::vector<double>>("times", {0.5, 1.0});
  const int lattice_n = cfg.param("lattice_n", 12);
  const double x_half = cfg.param("x_extent", 3.2);
  const double p_max = cfg.param("p_max", 3.2);
  const Index raster_n = cfg.param<Index>("raster_n", 256);
  const double tolerance = cfg.param("mass_tolerance", 0.1 * std::min(target_c_plus, 1.0 - target_c_plus));
  for (double t : times) {
    if (!(t > 0.0 && t <= cfg.T)) throw ConfigurationError("concentration_split: times must lie in (0, T]");
  }
  ConcentratingProfile profile;
  profile.theta = cfg.theta;
  if (target_c_plus != 0.5) profile.center_x = bump_shift_for_mass(target_c_plus);
  const double c_plus = profile.c_plus();
  const double c_minus = profile.c_minus();
  const TrajectoryBranch plus = branch_family(cfg.theta, {{BranchSign::Plus, 0.0}}).front();
  const TrajectoryBranch minus = branch_family(cfg.theta, {{BranchSign::Minus, 0.0}}).front();
  const PotentialSpec pot = PotentialSpec::rough_power(cfg.theta);
  const WeakMetricConfig metric;
  const RealVector freq = metric.frequencies();

  CsvTable table({"eps", "t", "distance_husimi", "distance_wigner", "right_mass", "left_mass", "x_sep", "c_plus",
                  "c_minus", "realization_gap"});
  std::map<double, std::vector<double>> husimi_by_time;
  std::map<double, std::vector<double>> wigner_by_time;
  double last_right = 0.0;
  double last_left = 0.0;
  std::vector<double> right_at_smallest;
  std::vector<double> left_at_smallest;
  for (double eps : cfg.eps_ladder) {
    const PositionGrid grid = resolved_grid(cfg, eps, -x_half, x_half, p_max, 1024);
    resolution_warnings(grid, eps, pot, cfg.dt, &m.warnings);
    const PhaseGrid raster{PositionGrid(raster_n, -1.1, 1.1), PositionGrid(raster_n, -1.1, 1.1)};
    ConcentratingData data = concentrating_wigner_data(profile, eps, raster, grid, lattice_n);
    std::vector<Eigen::MatrixXcd> chi(times.size(), Eigen::MatrixXcd::Zero(freq.size(), freq.size()));
    std::vector<double> right(times.size(), 0.0);
    std::vector<double> left(times.size(), 0.0);
    std::vector<double> trace(times.size(), 0.0);
    sweep_members(data.ensemble, pot, cfg.dt, times, [&](std::size_t k, const EnsembleMember& member) {
      const DensityEnsemble one = DensityEnsemble::pure(member.state);
      chi[k] += member.weight * wigner_characteristic(one, freq, freq);
      const double x_sep = 0.5 * plus.position(times[k]);
      right[k] += member.weight * husimi_half_line_mass(one, x_sep, true);
      left[k] += member.weight * husimi_half_line_mass(one, -x_sep, false);
      trace[k] += member.weight * member.state.norm() * member.state.norm();
    });
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const AtomicMeasure atoms{{{c_plus, plus.position(t), plus.momentum(t)}, {c_minus, minus.position(t), minus.momentum(t)}}};
      const CharacteristicSamples limit = characteristic(PhaseSpaceDensity(atoms), metric);
      CharacteristicSamples w{chi[k] / trace[k], trace[k]};
      CharacteristicSamples h = w;
      for (Index b = 0; b < freq.size(); ++b) {
        for (Index a = 0; a < freq.size(); ++a) h.values(a, b) *= std::exp(-eps * (freq[a] * freq[a] + freq[b] * freq[b]));
      }
      const double dh = weak_distance(h, limit, metric);
      const double dw = weak_distance(w, limit, metric);
      husimi_by_time[t].push_back(dh);
      wigner_by_time[t].push_back(dw);
      const double x_sep = 0.5 * plus.position(t);
      table.add({eps, t, dh, dw, right[k], left[k], x_sep, c_plus, c_minus, data.realization_gap});
      m.records.push_back({{"eps", eps},
                           {"t", t},
                           {"distance_husimi", dh},
                           {"distance_wigner", dw},
                           {"right_mass", right[k]},
                           {"left_mass", left[k]},
                           {"members", data.ensemble.size()},
                           {"grid_points", grid.size()},
                           {"realization_gap", data.realization_gap},
                           {"target_mass", data.target_mass}});
      last_right = right[k];
      last_left = left[k];
    }
    right_at_smallest = right;
    left_at_smallest = left;
  }
  for (const auto& [t, d] : husimi_by_time) {
    std::string detail;
    for (double v : d) detail += fmt(v) + " ";
    check(m, "Husimi weak distance strictly decreasing in eps at t=" + short_fmt(t), strictly_decreasing(d), detail);
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    check(m, "right half-plane mass within " + short_fmt(tolerance) + " of c+ at t=" + short_fmt(times[k]),
          std::abs(right_at_smallest[k] - c_plus) <= tolerance,
          "mass " + fmt(right_at_smallest[k]) + " vs c+ " + fmt(c_plus));
    check(m, "left half-plane mass within " + short_fmt(tolerance) + " of c- at t=" + short_fmt(times[k]),
          std::abs(left_at_smallest[k] - c_minus) <= tolerance,
          "mass " + fmt(left_at_smallest[k]) + " vs c- " + fmt(c_minus));
  }
  m.summary = {{"c_plus", c_plus},
               {"c_minus", c_minus},
               {"bump_shift", profile.center_x},
               {"right_mass_smallest_eps", last_right},
               {"left_mass_smallest_eps", last_left}};
  out.tables.emplace_back("concentration_split.csv", table);
  m.wall_clock_seconds = elapsed(t_start);
  emit(cfg, m, out);
  return m;
}

// ---- weak convergence

namespace {

struct WeakScenario {
  std::string name;
  PotentialSpec pot;
  double x0;
  double p0;
};

WeakScenario weak_scenario(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "smooth") {
    return {name, PotentialSpec::anharmonic(1.0, 0.1), cfg.param("smooth_x0", -1.0), cfg.param("smooth_p0", 0.5)};
  }
  if (name == "rough_away") {
    return {name, PotentialSpec::rough_power(cfg.theta), cfg.param("rough_x0", -1.7), cfg.param("rough_p0", 0.0)};
  }
  throw ConfigurationError("weak_convergence: unknown scenario '" + name + "'");
}

Eigen::MatrixXcd damp(const Eigen::MatrixXcd& chi, const RealVector& freq, double eps) {
  Eigen::MatrixXcd h = chi;
  for (Index b = 0; b < freq.size(); ++b) {
    for (Index a = 0; a < freq.size(); ++a) h(a, b) *= std::exp(-eps * (freq[a] * freq[a] + freq[b] * freq[b]));
  }
  return h;
}

}  // namespace

RunManifest run_weak_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  RunManifest m = start_manifest(cfg);
  Outputs out;
  const auto scenarios = cfg.param<std::vector<std::string>>("scenarios", {"smooth", "rough_away"});
  const double variance = cfg.param("variance", 0.2);
  const int n_times = cfg.param("time_samples", 4);
  const int per_axis = cfg.param("particles_per_axis", 64);
  const double x_half = cfg.param("x_extent", 7.0);
  const double p_max = cfg.param("p_max", 5.0);
  const std::vector<double> mollify = cfg.eps_mollify.empty() ? std::vector<double>{0.0} : cfg.eps_mollify;
  const WeakMetricConfig metric;
  const RealVector freq = metric.frequencies();
  std::vector<double> times{0.0};
  for (double t : linspace_times(cfg.T, n_times)) times.push_back(t);

  CsvTable table({"scenario", "eps", "eps_mollify", "t", "distance", "wigner_distance"});
  CsvTable ladder({"scenario", "eps", "eps_mollify", "sup_distance", "sup_wigner_distance"});
  for (const auto& name : scenarios) {
    const WeakScenario sc = weak_scenario(name, cfg);
    // classical reference: eps-independent datum, one cloud per mollification
    const ParticleCloud cloud0 = gaussian_particles(sc.x0, sc.p0, variance, per_axis);
    std::vector<std::vector<CharacteristicSamples>> classical(mollify.size());
    for (std::size_t q = 0; q < mollify.size(); ++q) {
      const ForceField field = mollify[q] == 0.0 ? ForceField::exact(sc.pot)
                                                 : ForceField::for_range(sc.pot, mollify[q], -x_half, x_half);
      ParticleCloud cloud = cloud0;
      double now = 0.0;
      for (double t : times) {
        if (t != now) cloud = transport_particles(cloud, field, cfg.dt, t - now);
        now = t;
        classical[q].push_back(characteristic(cloud.as_measure(), metric));
      }
    }
    std::vector<std::vector<double>> sup(mollify.size());
    for (double eps : cfg.eps_ladder) {
      const PositionGrid grid = resolved_grid(cfg, eps, -x_half, x_half, p_max, 256);
      resolution_warnings(grid, eps, sc.pot, cfg.dt, &m.warnings);
      DensityEnsemble ens = gaussian_mixed_state(sc.x0, sc.p0, variance, eps, grid, 1e-10);
      std::vector<Eigen::MatrixXcd> chi(times.size(), Eigen::MatrixXcd::Zero(freq.size(), freq.size()));
      std::vector<double> trace(times.size(), 0.0);
      double edge = 0.0;
      sweep_members(ens, sc.pot, cfg.dt, times, [&](std::size_t k, const EnsembleMember& member) {
        chi[k] += member.weight * wigner_characteristic(DensityEnsemble::pure(member.state), freq, freq);
        trace[k] += member.weight * member.state.norm() * member.state.norm();
        edge = std::max(edge, member.weight * boundary_mass(member.state, 0.5));
      });
      if (edge > 1e-8) warn(&m.warnings, name + " eps=" + short_fmt(eps) + ": mass near the grid edge");
      for (std::size_t q = 0; q < mollify.size(); ++q) {
        double worst = 0.0;
        double worst_w = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
          const CharacteristicSamples h{damp(chi[k], freq, eps) / trace[k], trace[k]};
          const CharacteristicSamples w{chi[k] / trace[k], trace[k]};
          const double d = weak_distance(h, classical[q][k], metric);
          const double dw = weak_distance(w, classical[q][k], metric);
          table.add_text({name, fmt(eps), fmt(mollify[q]), fmt(times[k]), fmt(d), fmt(dw)});
          worst = std::max(worst, d);
          worst_w = std::max(worst_w, dw);
        }
        sup[q].push_back(worst);
        ladder.add_text({name, fmt(eps), fmt(mollify[q]), fmt(worst), fmt(worst_w)});
        m.records.push_back({{"scenario", name},
                             {"eps", eps},
                             {"eps_mollify", mollify[q]},
                             {"sup_distance", worst},
                             {"sup_wigner_distance", worst_w},
                             {"members", ens.size()},
                             {"grid_points", grid.size()}});
      }
    }
    for (std::size_t q = 0; q < mollify.size(); ++q) {
      std::string detail;
      for (double v : sup[q]) detail += fmt(v) + " ";
      if (q == 0) {
        check(m, name + ": sup-over-t weak distance strictly decreasing over the ladder", strictly_decreasing(sup[q]),
              detail);
      } else if (!strictly_decreasing(sup[q])) {
        warn(&m.warnings, name + ": ladder not monotone for eps_mollify=" + fmt(mollify[q]) + ": " + detail);
      }
    }
    try {
      m.summary[name] = to_json(fit_rate(cfg.eps_ladder, sup[0], &m.warnings));
    } catch (const ConfigurationError&) {
      m.summary[name] = nullptr;
    }
  }
  out.tables.emplace_back("weak_distance.csv", table);
  out.tables.emplace_back("weak_ladder.csv", ladder);
  m.wall_clock_seconds = elapsed(t_start);
  emit(cfg, m, out);
  return m;
}

// ---- L2 rate against mollified transport

RunManifest run_l2_mollified_rate(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  RunManifest m = start_manifest(cfg);
  Outputs out;
  const std::string pot_name = cfg.param<std::string>("potential", "rough");
  const PotentialSpec pot = potential_by_name(pot_name, cfg.theta);
  const double variance = cfg.param("variance", 0.2);
  const double x0 = cfg.param("x0", -0.5);
  const double p0 = cfg.param("p0", 0.5);
  const double amplitude = cfg.param("amplitude", 1.0);
  const int n_times = cfg.param("time_samples", 4);
  const double sl_dt = cfg.param("transport_dt", 0.01);
  const double x_half = cfg.param("x_extent", 6.0);
  const double p_window = cfg.param("p_window", 3.5);

  const FourierConditionReport fourier =
      check_fourier_conditions(pot, PositionGrid(4096, -8.0, 8.0), cfg.theta);
  m.summary["fourier_conditions"] = {{"all_pass", fourier.all_pass()},
                                     {"fitted_C", fourier.fitted_C},
                                     {"fitted_exponents", fourier.fitted_exponents},
                                     {"integrability_value", fourier.integrability_value}};
  if (!fourier.all_pass()) {
    throw ConfigurationError("l2_mollified_rate: potential '" + pot.describe() +
                             "' fails the Fourier-shell conditions; refusing to run");
  }
  const double kappa_printed = std::min((1.0 + cfg.theta) / 2.0 - 1.0, cfg.theta / (2.0 + cfg.theta) - cfg.delta_growth);

  CsvTable table({"eps", "t", "normalized_l2", "transport_h2"});
  std::vector<double> sups;
  for (double eps : cfg.eps_ladder) {
    const PositionGrid grid = wigner_resolved_grid(cfg, eps, -x_half, x_half, p_window, 128);
    resolution_warnings(grid, eps, pot, cfg.dt, &m.warnings);
    DensityEnsemble ens = gaussian_mixed_state(x0, p0, variance, eps, grid, 1e-10);
    PhaseSpaceDensity w0 = wigner_ensemble(ens, &m.warnings);
    w0.grid_function().values *= amplitude;
    const double w0_norm = l2_norm(w0);
    SemiLagrangianSolver transport(w0, pot, eps, sl_dt, Limiter::None);
    SplitStepPropagator prop(grid, eps, pot);
    double now = 0.0;
    double worst = 0.0;
    double worst_h2 = 0.0;
    for (double t : linspace_times(cfg.T, n_times)) {
      for (auto& member : ens.members()) prop.advance(member.state, t - now, cfg.dt);
      transport.advance(t - now, &m.warnings);
      now = t;
      PhaseSpaceDensity wt = wigner_ensemble(ens, &m.warnings);
      wt.grid_function().values *= amplitude;
      const double d = l2_distance(wt, transport.density()) / w0_norm;
      const double h2 = h2_seminorm_sum(transport.grid_function()) / w0_norm;
      table.add({eps, t, d, h2});
      worst = std::max(worst, d);
      worst_h2 = std::max(worst_h2, h2);
      if (cfg.dump_grids) {
        out.grids.emplace_back("wigner_eps" + short_fmt(eps) + "_t" + short_fmt(t) + ".bin", wt);
        out.grids.emplace_back("transport_eps" + short_fmt(eps) + "_t" + short_fmt(t) + ".bin", transport.density());
      }
    }
    sups.push_back(worst);
    m.records.push_back({{"eps", eps},
                         {"sup_normalized_l2", worst},
                         {"sup_transport_h2_over_l2", worst_h2},
                         {"w0_l2", w0_norm},
                         {"members", ens.size()},
                         {"grid_points", grid.size()}});
  }
  CsvTable ladder({"eps", "distance"});
  for (std::size_t i = 0; i < sups.size(); ++i) ladder.add({cfg.eps_ladder[i], sups[i]});
  const RateFit fit = fit_rate(cfg.eps_ladder, sups, &m.warnings);
  m.summary["rate_fit"] = to_json(fit);
  m.summary["printed_kappa"] = kappa_printed;
  m.summary["delta_growth"] = cfg.delta_growth;
  check(m, "fitted rate slope positive", fit.fitted_slope > 0.0, "slope " + fmt(fit.fitted_slope));
  check(m, "rate fit r^2 above 0.9", fit.r_squared > 0.9, "r^2 " + fmt(fit.r_squared));
  out.tables.emplace_back("l2_distance.csv", table);
  out.tables.emplace_back("l2_ladder.csv", ladder);
  out.documents.emplace_back("rate_fit.json", to_json(fit));
  m.wall_clock_seconds = elapsed(t_start);
  emit(cfg, m, out);
  return m;
}

// ---- random family

RunManifest run_random_family(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  RunManifest m = start_manifest(cfg);
  Outputs out;
  RandomFamilySpec spec;
  const std::string law = cfg.param<std::string>("law", "gaussian");
  spec.law = law == "gaussian" ? LawKind::Gaussian
             : law == "uniform_box" ? LawKind::UniformBox
             : law == "point_mass" ? LawKind::PointMass
                                   : throw ConfigurationError("random_family: unknown law '" + law + "'");
  spec.mean_x = cfg.param("mean_x", 0.0);
  spec.mean_p = cfg.param("mean_p", 0.0);
  spec.sigma_x = cfg.param("sigma_x", 3.0);
  spec.sigma_p = cfg.param("sigma_p", 3.0);
  spec.samples = cfg.param<Index>("samples", 64);
  spec.seed = cfg.seed;
  const PotentialSpec pot = potential_by_name(cfg.param<std::string>("potential", "anharmonic"), cfg.theta);
  const int n_times = cfg.param("time_samples", 4);
  const double x_half = cfg.param("x_extent", 12.0);
  const double p_max = cfg.param("p_max", 18.0);
  const double eps_mollify = cfg.eps_mollify.empty() ? 0.0 : cfg.eps_mollify.front();
  const WeakMetricConfig metric;
  const RealVector freq = metric.frequencies();
  // symmetric window [-T, T]
  std::vector<double> forward{0.0};
  for (double t : linspace_times(cfg.T, n_times)) forward.push_back(t);

  const std::vector<Atom> points = sample_phase_points(spec);
  const ForceField field = eps_mollify == 0.0 ? ForceField::exact(pot)
                                              : ForceField::for_range(pot, eps_mollify, -x_half, x_half);
  // classical characteristic functions per sample and signed time
  std::vector<std::vector<CharacteristicSamples>> classical(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int dir : {1, -1}) {
      for (std::size_t k = (dir == 1 ? 0 : 1); k < forward.size(); ++k) {
        const SampledPath path =
            integrate_hamiltonian(points[i].x, points[i].p, field, cfg.dt, dir * forward[k], 1 << 30);
        classical[i].push_back(characteristic(PhaseSpaceDensity(AtomicMeasure{{{1.0, path.x.back(), path.p.back()}}}), metric));
      }
    }
  }

  CsvTable table({"eps", "sample", "x0", "p0", "sup_distance"});
  CsvTable ladder({"eps", "distance"});
  std::vector<double> averages;
  for (double eps : cfg.eps_ladder) {
    const PositionGrid grid = resolved_grid(cfg, eps, -x_half, x_half, p_max, 256);
    resolution_warnings(grid, eps, pot, cfg.dt, &m.warnings);
    const auto family = sample_random_family(spec, eps, grid);
    std::vector<EnsembleMember> weighted;
    for (const auto& f : family) weighted.push_back({f.point.mass, f.state});
    const double ratio = check_epsn_operator_bound(weighted, eps);
    if (ratio > 1.0) {
      warn(&m.warnings, "eps=" + short_fmt(eps) + ": operator bound ratio " + fmt(ratio) +
                            " > 1 (assumption regime violated)");
    }
    SplitStepPropagator prop(grid, eps, pot);
    double total = 0.0;
    for (std::size_t i = 0; i < family.size(); ++i) {
      double worst = 0.0;
      std::size_t slot = 0;
      for (int dir : {1, -1}) {
        WaveFunction psi = family[i].state;
        double now = 0.0;
        for (std::size_t k = (dir == 1 ? 0 : 1); k < forward.size(); ++k) {
          const double t = dir * forward[k];
          if (t != now) prop.advance(psi, t - now, cfg.dt);
          now = t;
          const CharacteristicSamples h = characteristic(DensityEnsemble::pure(psi), true, metric);
          worst = std::max(worst, weak_distance(h, classical[i][slot++], metric));
        }
      }
      table.add({eps, static_cast<double>(i), family[i].point.x, family[i].point.p, worst});
      total += family[i].point.mass * worst;
    }
    averages.push_back(total);
    ladder.add({eps, total});
    m.records.push_back({{"eps", eps},
                         {"average_sup_distance", total},
                         {"operator_bound_ratio", ratio},
                         {"grid_points", grid.size()},
                         {"family", to_json(spec, eps)}});
  }
  std::string detail;
  for (double v : averages) detail += fmt(v) + " ";
  check(m, "Monte-Carlo averaged sup-distance strictly decreasing over the ladder", strictly_decreasing(averages),
        detail);
  m.summary["law_ratio"] = spec.law == LawKind::PointMass
                               ? json(nullptr)
                               : json(2.0 * std::numbers::pi * spec.density(spec.mean_x, spec.mean_p));
  out.tables.emplace_back("random_family.csv", table);
  out.tables.emplace_back("random_ladder.csv", ladder);
  json manifest_doc = to_json(spec, cfg.eps_ladder.back());
  manifest_doc["eps_ladder"] = cfg.eps_ladder;
  out.documents.emplace_back("family.json", manifest_doc);
  m.wall_clock_seconds = elapsed(t_start);
  emit(cfg, m, out);
  return m;
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::HarmonicExact:
      return run_harmonic_exact(cfg);
    case ExperimentKind::WeakConvergence:
      return run_weak_convergence(cfg);
    case ExperimentKind::L2MollifiedRate:
      return run_l2_mollified_rate(cfg);
    case ExperimentKind::ConcentrationSplit:
      return run_concentration_split(cfg);
    case ExperimentKind::RandomFamily:
      return run_random_family(cfg);
    case ExperimentKind::ConjectureProbe:
      return run_conjecture_probe(cfg);
    case ExperimentKind::BranchAtlas:
      break;
  }
  return run_branch_atlas(cfg);
}

}  // namespace roughsc
