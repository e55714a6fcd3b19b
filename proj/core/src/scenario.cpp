#include "nlslab/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "nlslab/diagnostics.hpp"
#include "nlslab/error.hpp"
#include "nlslab/ground_state.hpp"

namespace nlslab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::critical_blowup: return "critical_blowup";
    case ScenarioKind::multi_bubble: return "multi_bubble";
    case ScenarioKind::bourgain_wang: return "bourgain_wang";
    case ScenarioKind::multi_soliton: return "multi_soliton";
    case ScenarioKind::nonpure_soliton: return "nonpure_soliton";
    case ScenarioKind::snls_gauge_check: return "snls_gauge_check";
    case ScenarioKind::loglog_supercritical: return "loglog_supercritical";
    case ScenarioKind::custom: return "custom";
  }
  return "custom";
}

// --- parsing -------------------------------------------------------------------

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "kind",          "p",
      "grid.d",        "grid.L",
      "grid.N",        "blowup.T",
      "blowup.x",      "blowup.w",
      "blowup.theta",  "soliton.c",
      "soliton.x0",    "soliton.w",
      "soliton.theta", "noise.kind",
      "noise.amplitude", "noise.modes",
      "noise.seed",    "noise.sigma",
      "noise.flat_points", "noise.temporal",
      "evolve.t0",     "evolve.t1",
      "evolve.dt0",    "evolve.cadence",
      "evolve.g_max",  "evolve.width_factor",
      "evolve.adaptive", "evolve.dt_level",
      "evolve.max_level", "evolve.max_steps",
      "evolve.checkpoints", "evolve.loc_radius",
      "z.amplitude_ratio", "z.center",
      "z.width",       "z.dt",
      "gaussian.mass_ratio", "gaussian.width",
      "gaussian.shape", "custom.initial",
      "check.determinism_steps", "check.virial_cutoff",
      "output.dir",    "output.snapshots",
      "ensemble.size", "ensemble.threads",
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

double to_double(const std::string& key, const std::string& s) {
  if (s.empty()) bad(key, "expected a number");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (*end != '\0' || !std::isfinite(v)) bad(key, "expected a number, got '" + s + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& s) {
  if (s.empty()) bad(key, "expected an integer");
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (*end != '\0') bad(key, "expected an integer, got '" + s + "'");
  return v;
}

std::size_t to_count(const std::string& key, const std::string& s) {
  const long long v = to_integer(key, s);
  if (v < 0) bad(key, "must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  if (s.empty() || s[0] == '-') bad(key, "expected an unsigned integer");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (*end != '\0') bad(key, "expected an unsigned integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad(key, "expected true or false");
}

std::vector<double> to_list(const std::string& key, const std::string& s, char sep = ';') {
  std::vector<double> out;
  for (const auto& part : split(s, sep)) out.push_back(to_double(key, part));
  if (out.empty()) bad(key, "expected at least one value");
  return out;
}

// "x" or "x,y" per point, points separated by ';'.
std::vector<Vec2> to_points(const std::string& key, const std::string& s, int dim) {
  std::vector<Vec2> out;
  for (const auto& part : split(s, ';')) {
    const auto comps = to_list(key, part, ',');
    if (static_cast<int>(comps.size()) != dim)
      bad(key, "each point needs " + std::to_string(dim) + " component(s)");
    out.push_back({comps[0], dim == 2 ? comps[1] : 0.0});
  }
  if (out.empty()) bad(key, "expected at least one point");
  return out;
}

std::vector<double> broadcast(const std::string& key, std::vector<double> v, std::size_t n) {
  if (v.size() == 1) return std::vector<double>(n, v[0]);
  if (v.size() != n) bad(key, "expected 1 or " + std::to_string(n) + " values");
  return v;
}

ScenarioKind parse_kind(const std::string& s) {
  for (auto k : {ScenarioKind::critical_blowup, ScenarioKind::multi_bubble,
                 ScenarioKind::bourgain_wang, ScenarioKind::multi_soliton,
                 ScenarioKind::nonpure_soliton, ScenarioKind::snls_gauge_check,
                 ScenarioKind::loglog_supercritical, ScenarioKind::custom})
    if (to_string(k) == s) return k;
  bad("kind", "unknown scenario kind '" + s + "'");
}

bool is_blowup_kind(ScenarioKind k) {
  return k == ScenarioKind::critical_blowup || k == ScenarioKind::multi_bubble ||
         k == ScenarioKind::bourgain_wang || k == ScenarioKind::snls_gauge_check;
}

bool is_soliton_kind(ScenarioKind k) {
  return k == ScenarioKind::multi_soliton || k == ScenarioKind::nonpure_soliton;
}

bool has_regular_profile(ScenarioKind k) {
  return k == ScenarioKind::bourgain_wang || k == ScenarioKind::nonpure_soliton;
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& is) {
  std::map<std::string, std::string> e;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_keys().count(key)) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (e.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    e[key] = value;
  }

  auto has = [&](const char* k) { return e.count(k) > 0; };
  auto get = [&](const char* k) { return e.at(k); };

  ScenarioConfig c;
  c.entries = e;
  if (!has("kind")) throw ConfigError("kind: missing");
  c.kind = parse_kind(get("kind"));

  const int d = has("grid.d") ? static_cast<int>(to_integer("grid.d", get("grid.d"))) : 1;
  const double L = has("grid.L") ? to_double("grid.L", get("grid.L")) : 40.0;
  const std::size_t N = has("grid.N") ? to_count("grid.N", get("grid.N")) : 1024;
  try {
    c.grid = make_grid(d, L, N);
  } catch (const PreconditionError& err) {
    throw ConfigError(std::string("grid: ") + err.what());
  }
  c.p = has("p") ? to_double("p", get("p")) : critical_exponent(d);
  if (!(c.p > 1.0)) bad("p", "must exceed 1");

  // profiles
  if (is_blowup_kind(c.kind)) {
    if (c.p != critical_exponent(d)) bad("p", "blow-up scenarios need the critical exponent");
    c.blowup.T = has("blowup.T") ? to_double("blowup.T", get("blowup.T")) : 1.0;
    const auto xs = has("blowup.x") ? to_points("blowup.x", get("blowup.x"), d) : std::vector<Vec2>{{0.0, 0.0}};
    const auto ws = broadcast("blowup.w", has("blowup.w") ? to_list("blowup.w", get("blowup.w")) : std::vector<double>{1.0}, xs.size());
    const auto th = broadcast("blowup.theta", has("blowup.theta") ? to_list("blowup.theta", get("blowup.theta")) : std::vector<double>{0.0}, xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) c.blowup.bubbles.push_back({xs[k], ws[k], th[k]});
    if (c.kind == ScenarioKind::multi_bubble && xs.size() < 2) bad("blowup.x", "multi_bubble needs at least two points");
    try {
      validate(c.blowup);
    } catch (const PreconditionError& err) {
      throw ConfigError(std::string("blowup: ") + err.what());
    }
  }
  if (is_soliton_kind(c.kind)) {
    if (!has("soliton.c") || !has("soliton.x0")) bad("soliton", "soliton.c and soliton.x0 are required");
    const auto cs = to_points("soliton.c", get("soliton.c"), d);
    const auto x0 = to_points("soliton.x0", get("soliton.x0"), d);
    if (cs.size() != x0.size()) bad("soliton.x0", "needs one position per velocity");
    const auto ws = broadcast("soliton.w", has("soliton.w") ? to_list("soliton.w", get("soliton.w")) : std::vector<double>{1.0}, cs.size());
    const auto th = broadcast("soliton.theta", has("soliton.theta") ? to_list("soliton.theta", get("soliton.theta")) : std::vector<double>{0.0}, cs.size());
    c.solitons.p = c.p;
    for (std::size_t k = 0; k < cs.size(); ++k) c.solitons.solitons.push_back({cs[k], x0[k], ws[k], th[k]});
    if (c.kind == ScenarioKind::multi_soliton && cs.size() < 2) bad("soliton.c", "multi_soliton needs at least two solitons");
    try {
      validate(c.solitons);
    } catch (const PreconditionError& err) {
      throw ConfigError(std::string("soliton: ") + err.what());
    }
  }

  // noise
  const std::string nkind = has("noise.kind") ? get("noise.kind") : "none";
  if (nkind != "none") {
    NoiseDescription n;
    try {
      n.kind = parse_profile_kind(nkind);
    } catch (const ConfigError& err) {
      bad("noise.kind", err.what());
    }
    n.amplitude = has("noise.amplitude") ? to_double("noise.amplitude", get("noise.amplitude")) : 0.0;
    if (n.amplitude < 0.0) bad("noise.amplitude", "must be nonnegative");
    n.modes = has("noise.modes") ? to_count("noise.modes", get("noise.modes")) : 1;
    if (n.modes < 1 || n.modes > 8) bad("noise.modes", "must be in 1..8");
    n.seed = has("noise.seed") ? to_u64("noise.seed", get("noise.seed")) : 0;
    n.sigma = has("noise.sigma") ? to_double("noise.sigma", get("noise.sigma")) : 2.0;
    if (has("noise.flat_points")) n.flat_points = to_points("noise.flat_points", get("noise.flat_points"), d);
    if (n.kind == ProfileKind::flat && n.flat_points.empty()) bad("noise.flat_points", "required for the flat kind");
    const std::string temporal = has("noise.temporal") ? get("noise.temporal") : "brownian";
    if (temporal == "brownian") n.temporal = TemporalDriver::brownian;
    else if (temporal == "sinusoid") n.temporal = TemporalDriver::sinusoid;
    else bad("noise.temporal", "expected brownian or sinusoid");
    c.noise = n;
  }
  if (c.kind == ScenarioKind::snls_gauge_check) {
    if (!c.noise || c.noise->kind != ProfileKind::constant)
      bad("noise.kind", "snls_gauge_check needs constant profiles");
    if (c.noise->temporal != TemporalDriver::brownian) bad("noise.temporal", "snls_gauge_check needs brownian");
  }

  // evolution
  if (has("evolve.t0")) c.t0 = to_double("evolve.t0", get("evolve.t0"));
  if (has("evolve.t1")) c.t1 = to_double("evolve.t1", get("evolve.t1"));
  if (!(c.t1 > c.t0)) bad("evolve.t1", "must exceed evolve.t0");
  if (has("evolve.dt0")) c.dt0 = to_double("evolve.dt0", get("evolve.dt0"));
  if (!(c.dt0 > 0.0)) bad("evolve.dt0", "must be positive");
  if (has("evolve.cadence")) c.cadence = to_count("evolve.cadence", get("evolve.cadence"));
  if (c.cadence < 1) bad("evolve.cadence", "must be at least 1");
  if (has("evolve.g_max")) c.g_max = to_double("evolve.g_max", get("evolve.g_max"));
  if (has("evolve.width_factor")) c.width_factor = to_double("evolve.width_factor", get("evolve.width_factor"));
  if (c.width_factor < 0.0) bad("evolve.width_factor", "must be nonnegative");
  if (has("evolve.adaptive")) c.adaptive = to_bool("evolve.adaptive", get("evolve.adaptive"));
  if (has("evolve.dt_level")) c.dt_level = static_cast<int>(to_integer("evolve.dt_level", get("evolve.dt_level")));
  if (has("evolve.max_level")) c.max_level = static_cast<int>(to_integer("evolve.max_level", get("evolve.max_level")));
  if (c.max_level < 0 || c.max_level > 29) bad("evolve.max_level", "must be in 0..29");
  if (c.dt_level < 0 || c.dt_level > c.max_level) bad("evolve.dt_level", "must be in 0..max_level");
  if (has("evolve.max_steps")) c.max_steps = to_count("evolve.max_steps", get("evolve.max_steps"));
  if (has("evolve.checkpoints")) {
    std::string s = get("evolve.checkpoints");
    std::replace(s.begin(), s.end(), ';', ',');
    c.checkpoints = to_list("evolve.checkpoints", s, ',');
  }
  if (has("evolve.loc_radius")) c.loc_radius = to_double("evolve.loc_radius", get("evolve.loc_radius"));
  if (!(c.loc_radius > 0.0)) bad("evolve.loc_radius", "must be positive");

  // regular profile
  if (has("z.amplitude_ratio")) c.z_amplitude_ratio = to_double("z.amplitude_ratio", get("z.amplitude_ratio"));
  if (has("z.center")) c.z_center = to_points("z.center", get("z.center"), d).at(0);
  if (has("z.width")) c.z_width = to_double("z.width", get("z.width"));
  if (has("z.dt")) c.z_dt = to_double("z.dt", get("z.dt"));
  if (has_regular_profile(c.kind)) {
    if (c.z_amplitude_ratio < 0.0 || c.z_amplitude_ratio > 0.1)
      bad("z.amplitude_ratio", "must be in [0, 0.1] (smallness of the regular profile)");
    if (!(c.z_width > 0.0)) bad("z.width", "must be positive");
    if (!(c.z_dt > 0.0)) bad("z.dt", "must be positive");
    if (c.kind == ScenarioKind::bourgain_wang) {
      for (const auto& b : c.blowup.bubbles)
        if (std::hypot(b.x[0] - c.z_center[0], b.x[1] - c.z_center[1]) < 10.0)
          bad("z.center", "must be at least 10 away from every singular point");
    }
  }

  if (has("gaussian.mass_ratio")) c.mass_ratio = to_double("gaussian.mass_ratio", get("gaussian.mass_ratio"));
  if (has("gaussian.width")) c.gaussian_width = to_double("gaussian.width", get("gaussian.width"));
  if (has("gaussian.shape")) c.gaussian_shape = get("gaussian.shape");
  if (c.kind == ScenarioKind::loglog_supercritical) {
    if (c.p != critical_exponent(d)) bad("p", "loglog_supercritical needs the critical exponent");
    if (!(c.mass_ratio > 0.0)) bad("gaussian.mass_ratio", "must be positive");
    if (!(c.gaussian_width > 0.0)) bad("gaussian.width", "must be positive");
    if (c.gaussian_shape != "ground_state" && c.gaussian_shape != "gaussian")
      bad("gaussian.shape", "expected ground_state or gaussian");
  }

  if (has("custom.initial")) c.custom_initial = get("custom.initial");
  if (c.kind == ScenarioKind::custom && c.custom_initial.empty()) bad("custom.initial", "required for kind = custom");

  if (has("check.determinism_steps")) c.determinism_steps = to_count("check.determinism_steps", get("check.determinism_steps"));
  if (has("check.virial_cutoff")) c.virial_cutoff = to_double("check.virial_cutoff", get("check.virial_cutoff"));
  if (c.virial_cutoff < 0.0) bad("check.virial_cutoff", "must be nonnegative");

  c.output_dir = has("output.dir") ? get("output.dir") : "out/" + to_string(c.kind);
  if (c.output_dir.empty()) bad("output.dir", "must not be empty");
  if (has("output.snapshots")) {
    const auto s = get("output.snapshots");
    if (s == "all") c.all_snapshots = true;
    else if (s == "final") c.all_snapshots = false;
    else bad("output.snapshots", "expected all or final");
  }
  if (has("ensemble.size")) c.ensemble_size = to_count("ensemble.size", get("ensemble.size"));
  if (c.ensemble_size < 1) bad("ensemble.size", "must be at least 1");
  if (has("ensemble.threads")) c.threads = to_count("ensemble.threads", get("ensemble.threads"));
  return c;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario file " + path);
  return parse_scenario(is);
}

std::string resolve_output_dir(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("NLSLAB_OUTPUT_ROOT"); root && *root) p = fs::path(root) / p;
  }
  return p.lexically_normal().string();
}

// --- initial data and reference -------------------------------------------------

namespace {

double q_h1_norm(int d, double p) {
  return std::sqrt(ground_state_mass(d, p) + ground_state_gradient_sq(d, p));
}

ComplexField regular_profile(const ScenarioConfig& c) {
  ComplexField z = sample_field(c.grid, [&](const Vec2& x) {
    const double r2 = (x[0] - c.z_center[0]) * (x[0] - c.z_center[0]) +
                      (x[1] - c.z_center[1]) * (x[1] - c.z_center[1]);
    return std::exp(-r2 / (c.z_width * c.z_width));
  });
  const double h1 = std::sqrt(l2_norm_sq(z) + gradient_norm_sq(z));
  z *= cplx(c.z_amplitude_ratio * q_h1_norm(c.grid.dim, c.p) / h1);
  return z;
}

ComplexField nan_field(const GridSpec& g) {
  ComplexField f(g);
  std::fill(f.values.begin(), f.values.end(), cplx(std::numeric_limits<double>::quiet_NaN()));
  return f;
}

/// z(t) advanced lazily along the (increasing) times at which it is requested.
struct RegularTrack {
  ComplexField z;
  double t = 0.0;
  double p = 5.0;

  const ComplexField& at(double s) {
    if (s > t) {
      z = step_strang(z, s - t, p);
      t = s;
    }
    return z;
  }
};

}  // namespace

EvolveConfig build_evolve_config(const ScenarioConfig& c) {
  try {
    EvolveConfig ev;
    ev.grid = c.grid;
    ev.p = c.p;
    ev.t0 = c.t0;
    ev.t1 = c.t1;
    ev.dt0 = c.dt0;
    ev.cadence = c.cadence;
    ev.g_max = c.g_max;
    ev.width_factor = c.width_factor;
    ev.adaptive = c.adaptive;
    ev.dt_level = c.dt_level;
    ev.max_level = c.max_level;
    ev.max_steps = c.max_steps;
    ev.checkpoints = c.checkpoints;
    ev.loc_radius = c.loc_radius;
    if (c.noise) ev.noise = NoiseSpec{c.noise->build(c.grid), c.noise->seed, c.noise->temporal};

    const int d = c.grid.dim;
    const auto q = std::make_shared<RadialProfile>(RadialProfile::for_dimension(d, c.p));
    const GridSpec grid = c.grid;

    std::optional<ComplexField> z0;
    if (c.kind == ScenarioKind::bourgain_wang)
      z0 = backward_solve(regular_profile(c), c.blowup.T, c.t0, c.p, c.z_dt);
    if (c.kind == ScenarioKind::nonpure_soliton) z0 = regular_profile(c);

    if (is_blowup_kind(c.kind)) {
      if (!(c.t0 < c.blowup.T)) throw ConfigError("evolve.t0: must precede blowup.T");
      ev.initial = pseudo_conformal_blowup(c.blowup, c.t0, grid, *q);
      const BlowupParams params = c.blowup;
      if (z0) {
        ev.initial += *z0;
        ev.reference = [params, q, grid, track = RegularTrack{*z0, c.t0, c.p}](double t) mutable {
          const ComplexField& z = track.at(t);
          try {
            return pseudo_conformal_blowup(params, t, grid, *q) + z;
          } catch (const PreconditionError&) {
            return nan_field(grid);
          }
        };
      } else {
        ev.reference = [params, q, grid](double t) {
          try {
            return pseudo_conformal_blowup(params, t, grid, *q);
          } catch (const PreconditionError&) {
            return nan_field(grid);
          }
        };
      }
    } else if (is_soliton_kind(c.kind)) {
      ev.initial = solitary_wave(c.solitons, c.t0, grid, *q);
      const SolitonParams params = c.solitons;
      if (z0) {
        ev.initial += *z0;
        ev.reference = [params, q, grid, track = RegularTrack{*z0, c.t0, c.p}](double t) mutable {
          const ComplexField& z = track.at(t);
          try {
            return solitary_wave(params, t, grid, *q) + z;
          } catch (const PreconditionError&) {
            return nan_field(grid);
          }
        };
      } else {
        ev.reference = [params, q, grid](double t) {
          try {
            return solitary_wave(params, t, grid, *q);
          } catch (const PreconditionError&) {
            return nan_field(grid);
          }
        };
      }
    } else if (c.kind == ScenarioKind::loglog_supercritical) {
      const double target = c.mass_ratio * ground_state_mass(d, c.p);
      const double w = c.gaussian_width;
      if (c.gaussian_shape == "ground_state")
        ev.initial = sample_field(grid, [&](const Vec2& x) { return (*q)(std::hypot(x[0], x[1]) / w); });
      else
        ev.initial = sample_field(grid, [&](const Vec2& x) { return std::exp(-(x[0] * x[0] + x[1] * x[1]) / (w * w)); });
      ev.initial *= cplx(std::sqrt(target / l2_norm_sq(ev.initial)));
    } else {
      Snapshot s = read_snapshot_file(c.custom_initial);
      if (!(s.field.grid == grid)) throw ConfigError("custom.initial: grid differs from grid.*");
      ev.initial = std::move(s.field);
    }
    return ev;
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  } catch (const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(e.what());
  }
}

// --- running -------------------------------------------------------------------

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double max_mass_drift(const Trajectory& traj) {
  const double m0 = traj.diagnostics.front().mass;
  double drift = 0.0;
  for (const auto& r : traj.diagnostics) drift = std::max(drift, std::abs(r.mass - m0) / m0);
  return drift;
}

bool same_rows(const DiagnosticRow& a, const DiagnosticRow& b) {
  auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return same(a.t, b.t) && same(a.mass, b.mass) && same(a.hamiltonian, b.hamiltonian) &&
         same(a.grad_norm, b.grad_norm) && same(a.lambda, b.lambda) &&
         same(a.center[0], b.center[0]) && same(a.center[1], b.center[1]) &&
         same(a.loc_mass, b.loc_mass) &&
         // the residual is only evaluated on snapshot steps, which differ when the replay stops
         (std::isnan(a.residual) || std::isnan(b.residual) || a.residual == b.residual);
}

NoiseProfileSet banica_probe(const GridSpec& grid, const std::optional<NoiseSpec>& noise) {
  if (noise && noise->profiles.kind() != ProfileKind::constant) return noise->profiles;
  return make_profiles(ProfileKind::schwartz, 1.0, {}, grid, 1, 2.0);
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config, bool write) {
  const EvolveConfig ev = build_evolve_config(config);
  const GridSpec& grid = config.grid;
  const int d = grid.dim;
  const bool critical = config.p == critical_exponent(d);

  ScenarioResult result;
  result.output_dir = resolve_output_dir(config.output_dir);
  result.trajectory = integrate(ev);
  const Trajectory& traj = result.trajectory;
  const bool failed = traj.stop_reason == StopReason::numerical_failure;

  json s;
  s["kind"] = to_string(config.kind);
  s["stop_reason"] = to_string(traj.stop_reason);
  s["failure"] = traj.failure;
  s["steps"] = traj.steps();
  s["final_time"] = traj.final_time();
  s["T_est"] = number(traj.T_est);

  // mass
  const double drift = max_mass_drift(traj);
  const double drift_limit = config.noise ? 1e-10 : 1e-12;
  s["mass_drift"] = drift;
  s["mass_drift_limit"] = drift_limit;
  if (!(drift < drift_limit)) result.failed_checks.push_back("mass_drift");

  // Banica estimate on every recorded snapshot with at most critical mass
  const double q_mass = ground_state_mass(d, critical_exponent(d));
  const NoiseProfileSet probe = banica_probe(grid, ev.noise);
  std::vector<double> b_t, b_lhs, b_rhs, b_ok;
  bool banica_ok = true;
  if (critical) {
    for (const auto& snap : traj.snapshots) {
      if (std::sqrt(l2_norm_sq(snap.field)) > std::sqrt(q_mass) + 1e-8) continue;
      const BanicaResult b = banica_check(snap.field, probe, q_mass);
      b_t.push_back(snap.time);
      b_lhs.push_back(b.lhs);
      b_rhs.push_back(b.rhs);
      b_ok.push_back(b.satisfied ? 1.0 : 0.0);
      banica_ok = banica_ok && b.satisfied;
    }
  }
  s["banica_ok"] = banica_ok;
  s["banica_checked"] = b_t.size();
  if (!banica_ok) result.failed_checks.push_back("banica");

  // determinism: replay the first steps and compare bitwise
  bool deterministic = true;
  const std::size_t replay = std::min(config.determinism_steps, traj.steps());
  if (replay > 0) {
    EvolveConfig again = build_evolve_config(config);
    again.max_steps = replay;
    const Trajectory rerun = integrate(again);
    deterministic = rerun.diagnostics.size() == replay + 1;
    for (std::size_t i = 0; deterministic && i <= replay; ++i) {
      deterministic = same_rows(rerun.diagnostics[i], traj.diagnostics[i]);
      if (deterministic && !traj.drive.empty()) deterministic = rerun.drive[i] == traj.drive[i];
    }
    for (const auto& a : rerun.snapshots) {
      if (!deterministic) break;
      for (const auto& b : traj.snapshots)
        if (a.time == b.time) deterministic = a.field.values == b.field.values;
    }
  }
  s["determinism_ok"] = deterministic;
  s["determinism_steps"] = replay;
  if (!deterministic) result.failed_checks.push_back("determinism");

  // gauge equivalence against the deterministic run
  if (config.kind == ScenarioKind::snls_gauge_check) {
    EvolveConfig det = ev;
    det.noise.reset();
    const Trajectory plain = integrate(det);
    double worst = 0.0;
    const std::size_t n = std::min(plain.snapshots.size(), traj.snapshots.size());
    bool aligned = plain.snapshots.size() == traj.snapshots.size();
    for (std::size_t k = 0; k < n; ++k) {
      if (plain.snapshots[k].time != traj.snapshots[k].time) aligned = false;
      const auto& a = plain.snapshots[k].field;
      const auto& b = traj.snapshots[k].field;
      for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(std::abs(a[i]) - std::abs(b[i])));
    }
    const bool same_stop = aligned && plain.steps() == traj.steps() && plain.stop_reason == traj.stop_reason;
    s["gauge_max_discrepancy"] = worst;
    s["gauge_same_stop"] = same_stop;
    s["gauge_stop_steps"] = {plain.steps(), traj.steps()};
    if (!(worst < 1e-10) || !same_stop) result.failed_checks.push_back("gauge");
  }

  // Hamiltonian evolution identity
  std::optional<HamiltonianEvolution> hevo;
  if (ev.noise && ev.noise->temporal == TemporalDriver::brownian) {
    hevo = hamiltonian_evolution_residual(traj, ev.noise->profiles);
    s["h_evo_max_residual"] = hevo->max_abs_residual;
  } else {
    s["h_evo_max_residual"] = nullptr;
  }

  // rate fit
  const auto rate = trajectory_rate_fit(traj);
  s["alpha"] = rate ? number(rate->alpha) : json(nullptr);
  s["loglog_score"] = rate ? number(rate->loglog_score) : json(nullptr);
  s["rate_fit_T"] = rate ? number(rate->T_est) : json(nullptr);

  // modulation, concentration, virial about the last fitted center
  const ComplexField& last = traj.snapshots.back().field;
  Vec2 center = peak_center(last);
  if (critical) {
    const RadialProfile q = RadialProfile::for_dimension(d, config.p);
    try {
      const ModulationFit fit = modulation_fit(last, q);
      center = fit.center;
      s["modulation"] = {{"lambda", fit.lambda},
                         {"center", {fit.center[0], fit.center[1]}},
                         {"gamma", fit.gamma},
                         {"residual_l2", fit.residual_l2},
                         {"residual_h1", fit.residual_h1},
                         {"secondary_peak", fit.secondary_peak}};
    } catch (const PreconditionError&) {
      s["modulation"] = nullptr;
    }
    s["concentration"] = {{"R", 1.0}, {"fraction", localized_mass(last, center, 1.0) / q_mass}};
  }
  s["virial_center"] = {center[0], center[1]};
  std::vector<double> v_t, v_uncut;
  for (const auto& snap : traj.snapshots) {
    v_t.push_back(snap.time);
    v_uncut.push_back(virial(snap.field, center, std::nullopt));
  }
  const std::optional<CutoffSpec> cutoff =
      config.virial_cutoff > 0.0 ? std::optional<CutoffSpec>(make_cutoff(config.virial_cutoff)) : std::nullopt;
  const VirialEvolution vevo = virial_evolution_residual(traj, center, cutoff);
  s["virial_evolution_max_residual"] = vevo.max_abs_residual;

  // profile residuals at the snapshots
  std::vector<std::vector<double>> pr_cols;
  std::vector<std::string> pr_header;
  if (is_blowup_kind(config.kind) || is_soliton_kind(config.kind)) {
    const std::size_t K = is_blowup_kind(config.kind) ? config.blowup.bubbles.size() : config.solitons.solitons.size();
    pr_header = {"t", "l2", "h1", "sigma"};
    for (std::size_t k = 0; k < K; ++k) pr_header.push_back("h1_" + std::to_string(k + 1));
    pr_cols.assign(pr_header.size(), {});
    const RadialProfile q = RadialProfile::for_dimension(d, config.p);
    std::optional<RegularTrack> track;
    if (has_regular_profile(config.kind)) {
      const ComplexField z0 = config.kind == ScenarioKind::bourgain_wang
          ? backward_solve(regular_profile(config), config.blowup.T, config.t0, config.p, config.z_dt)
          : regular_profile(config);
      track = RegularTrack{z0, config.t0, config.p};
    }
    double worst_h1 = 0.0;
    for (const auto& snap : traj.snapshots) {
      std::optional<ComplexField> z;
      if (track) z = track->at(snap.time);
      try {
        const ProfileResidual r = is_blowup_kind(config.kind)
            ? profile_residuals(snap.field, snap.time, config.blowup, q, z)
            : profile_residuals(snap.field, snap.time, config.solitons, q, z);
        pr_cols[0].push_back(snap.time);
        pr_cols[1].push_back(r.global.l2);
        pr_cols[2].push_back(r.global.h1);
        pr_cols[3].push_back(r.global.sigma);
        for (std::size_t k = 0; k < K; ++k) pr_cols[4 + k].push_back(r.per_profile[k].h1);
        worst_h1 = std::max(worst_h1, r.global.h1);
      } catch (const PreconditionError&) {
        // exact profile not representable at this time
      }
    }
    s["profile_residual_max_h1"] = worst_h1;
  }

  result.exit_code = failed ? 3 : (result.failed_checks.empty() ? 0 : 1);
  s["failed_checks"] = result.failed_checks;
  s["exit_code"] = result.exit_code;
  s["config"] = config.entries;
  result.summary_json = s.dump(2) + "\n";

  if (write) {
    const fs::path out(result.output_dir);
    fs::remove_all(out / "checks");
    fs::create_directories(out / "checks");
    write_trajectory(traj, (out / "trajectory").string(), config.noise, config.all_snapshots);
    write_csv((out / "checks" / "banica.csv").string(), {"t", "lhs", "rhs", "satisfied"},
              {b_t, b_lhs, b_rhs, b_ok});
    write_csv((out / "checks" / "virial.csv").string(), {"t", "virial"}, {v_t, v_uncut});
    write_csv((out / "checks" / "virial_evolution.csv").string(),
              {"t", "direct", "integrated", "residual"},
              {vevo.t, vevo.direct, vevo.integrated, vevo.residual});
    if (hevo)
      write_csv((out / "checks" / "h_evo.csv").string(), {"t", "H", "H1", "H2", "residual"},
                {hevo->t, hevo->h, hevo->h1, hevo->h2, hevo->residual});
    if (!pr_header.empty())
      write_csv((out / "checks" / "profile_residual.csv").string(), pr_header, pr_cols);
    std::ofstream os(out / "summary.json", std::ios::binary);
    if (!os) throw Error("cannot write summary.json");
    os << result.summary_json;
  }
  return result;
}

std::string diagnose_dump(const TrajectoryDump& dump, const DiagnoseOptions& options,
                          const std::string& csv_dir) {
  const Trajectory& traj = dump.trajectory;
  if (traj.snapshots.empty() || traj.diagnostics.empty()) throw Error("trajectory dump is empty");
  const int d = traj.grid.dim;
  const bool critical = traj.p == critical_exponent(d);
  const double q_mass = ground_state_mass(d, critical_exponent(d));
  std::optional<NoiseProfileSet> profiles;
  if (dump.noise) profiles = dump.noise->build(traj.grid);
  const NoiseProfileSet probe =
      profiles && profiles->kind() != ProfileKind::constant
          ? *profiles
          : make_profiles(ProfileKind::schwartz, 1.0, {}, traj.grid, 1, 2.0);

  json r;
  std::vector<double> b_t, b_lhs, b_rhs, b_ok;
  bool banica_ok = true;
  if (critical) {
    for (const auto& snap : traj.snapshots) {
      if (std::sqrt(l2_norm_sq(snap.field)) > std::sqrt(q_mass) + 1e-8) continue;
      const BanicaResult b = banica_check(snap.field, probe, q_mass);
      b_t.push_back(snap.time);
      b_lhs.push_back(b.lhs);
      b_rhs.push_back(b.rhs);
      b_ok.push_back(b.satisfied ? 1.0 : 0.0);
      banica_ok = banica_ok && b.satisfied;
    }
  }
  r["banica_ok"] = banica_ok;

  std::optional<HamiltonianEvolution> hevo;
  if (profiles && traj.temporal == TemporalDriver::brownian) hevo = hamiltonian_evolution_residual(traj, *profiles);
  r["h_evo_max_residual"] = hevo ? json(hevo->max_abs_residual) : json(nullptr);

  const ComplexField& last = traj.snapshots.back().field;
  Vec2 center = peak_center(last);
  if (critical) {
    try {
      center = modulation_fit(last, RadialProfile::for_dimension(d, traj.p)).center;
    } catch (const PreconditionError&) {
    }
  }
  const std::optional<CutoffSpec> cutoff =
      options.cutoff > 0.0 ? std::optional<CutoffSpec>(make_cutoff(options.cutoff)) : std::nullopt;
  json series = json::array();
  std::vector<double> v_t, v_val;
  for (const auto& snap : traj.snapshots) {
    v_t.push_back(snap.time);
    v_val.push_back(virial(snap.field, center, cutoff));
    series.push_back({snap.time, v_val.back()});
  }
  r["virial_series"] = series;
  r["virial_center"] = {center[0], center[1]};
  const VirialEvolution vevo = virial_evolution_residual(traj, center, cutoff);
  r["virial_evolution_max_residual"] = vevo.max_abs_residual;

  r["T_est"] = number(traj.T_est);
  const auto rate = trajectory_rate_fit(traj);
  r["alpha"] = rate ? number(rate->alpha) : json(nullptr);
  r["loglog_score"] = rate ? number(rate->loglog_score) : json(nullptr);
  r["concentration"] = {{"R", options.radius},
                        {"fraction", localized_mass(last, center, options.radius) / q_mass}};

  if (!csv_dir.empty()) {
    fs::create_directories(csv_dir);
    const fs::path dir(csv_dir);
    write_csv((dir / "banica.csv").string(), {"t", "lhs", "rhs", "satisfied"}, {b_t, b_lhs, b_rhs, b_ok});
    write_csv((dir / "virial.csv").string(), {"t", "virial"}, {v_t, v_val});
    write_csv((dir / "virial_evolution.csv").string(), {"t", "direct", "integrated", "residual"},
              {vevo.t, vevo.direct, vevo.integrated, vevo.residual});
    if (hevo)
      write_csv((dir / "h_evo.csv").string(), {"t", "H", "H1", "H2", "residual"},
                {hevo->t, hevo->h, hevo->h1, hevo->h2, hevo->residual});
  }
  return r.dump(2) + "\n";
}

// --- ensembles -----------------------------------------------------------------

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

EnsembleSummary ensemble_summary(std::vector<EnsembleMember> members) {
  if (members.size() < 2) throw PreconditionError("ensemble summary needs at least two members");
  EnsembleSummary out;
  std::vector<double> T, stop;
  for (const auto& m : members) {
    if (std::isfinite(m.T_est)) T.push_back(m.T_est);
    stop.push_back(m.stop_time);
  }
  out.T_median = quantile(T, 0.5);
  out.T_q1 = quantile(T, 0.25);
  out.T_q3 = quantile(T, 0.75);
  out.stop_median = quantile(stop, 0.5);
  json rows = json::array();
  for (const auto& m : members)
    rows.push_back({{"index", m.index},
                    {"seed", m.seed},
                    {"stop_reason", to_string(m.stop_reason)},
                    {"stop_time", m.stop_time},
                    {"steps", m.steps},
                    {"T_est", number(m.T_est)},
                    {"mass_drift", m.mass_drift}});
  json s;
  s["members"] = rows;
  s["T_est_median"] = number(out.T_median);
  s["T_est_q1"] = number(out.T_q1);
  s["T_est_q3"] = number(out.T_q3);
  s["stop_time_median"] = number(out.stop_median);
  out.summary_json = s.dump(2) + "\n";
  out.members = std::move(members);
  return out;
}

EnsembleSummary run_ensemble(const ScenarioConfig& config, bool write) {
  if (config.ensemble_size < 2) throw ConfigError("ensemble.size: an ensemble needs at least 2 members");
  const EvolveConfig base = build_evolve_config(config);
  const std::size_t n = config.ensemble_size;
  std::vector<EnsembleMember> members(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        EvolveConfig ev = base;
        const std::uint64_t seed = (config.noise ? config.noise->seed : 0) + i;
        if (ev.noise) ev.noise->seed = seed;
        const Trajectory traj = integrate(ev);
        members[i] = {i, seed, traj.stop_reason, traj.final_time(), traj.steps(), traj.T_est,
                      max_mass_drift(traj)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  EnsembleSummary out = ensemble_summary(std::move(members));
  if (write) {
    const fs::path dir(resolve_output_dir(config.output_dir));
    fs::create_directories(dir);
    std::ofstream csv(dir / "ensemble.csv", std::ios::binary);
    csv << "index,seed,stop_reason,stop_time,steps,T_est,mass_drift\n";
    for (const auto& m : out.members)
      csv << m.index << ',' << m.seed << ',' << to_string(m.stop_reason) << ','
          << format_double(m.stop_time) << ',' << m.steps << ',' << format_double(m.T_est) << ','
          << format_double(m.mass_drift) << '\n';
    std::ofstream js(dir / "ensemble_summary.json", std::ios::binary);
    js << out.summary_json;
  }
  return out;
}

}  // namespace nlslab
