#include "nlslab/trajectory_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "nlslab/error.hpp"

namespace nlslab {

namespace fs = std::filesystem;
using nlohmann::json;

NoiseProfileSet NoiseDescription::build(const GridSpec& grid) const {
  return make_profiles(kind, amplitude, flat_points, grid, modes, sigma);
}

std::vector<std::string> diagnostics_header(int dim) {
  std::vector<std::string> h{"t", "mass", "hamiltonian", "grad_norm", "lambda", "center_x"};
  if (dim == 2) h.push_back("center_y");
  h.push_back("loc_mass");
  h.push_back("residual");
  return h;
}

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::size_t& columns) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw Error("empty file " + path.string());
  columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw Error("malformed number in " + path.string());
      row.push_back(v);
      if (*end == ',') {
        p = end + 1;
      } else {
        break;
      }
    }
    if (row.size() != columns) throw Error("ragged row in " + path.string());
    rows.push_back(std::move(row));
  }
  return rows;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double as_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

StopReason parse_stop_reason(const std::string& s) {
  for (auto r : {StopReason::reached_t1, StopReason::blowup_threshold,
                 StopReason::width_underresolved, StopReason::step_limit,
                 StopReason::numerical_failure})
    if (to_string(r) == s) return r;
  throw Error("unknown stop reason: " + s);
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
  if (columns.size() != header.size()) throw PreconditionError("header and columns differ");
  auto os = open_out(path);
  os << join(header) << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) os << ',';
      os << format_double(columns[c][r]);
    }
    os << '\n';
  }
}

void write_trajectory(const Trajectory& traj, const std::string& dir,
                      const std::optional<NoiseDescription>& noise, bool all_snapshots) {
  const fs::path root(dir);
  fs::remove_all(root / "snapshots");  // stale files from an earlier run would pollute the dump
  fs::create_directories(root / "snapshots");

  {
    auto os = open_out(root / "diagnostics.csv");
    os << join(diagnostics_header(traj.grid.dim)) << '\n';
    for (const auto& r : traj.diagnostics) {
      os << format_double(r.t) << ',' << format_double(r.mass) << ','
         << format_double(r.hamiltonian) << ',' << format_double(r.grad_norm) << ','
         << format_double(r.lambda) << ',' << format_double(r.center[0]) << ',';
      if (traj.grid.dim == 2) os << format_double(r.center[1]) << ',';
      os << format_double(r.loc_mass) << ',' << format_double(r.residual) << '\n';
    }
  }

  if (!traj.drive.empty()) {
    auto os = open_out(root / "path.csv");
    os << 't';
    for (std::size_t l = 0; l < traj.drive.front().size(); ++l) os << ",B_" << (l + 1);
    os << '\n';
    for (std::size_t i = 0; i < traj.diagnostics.size(); ++i) {
      os << format_double(traj.diagnostics[i].t);
      for (double b : traj.drive[i]) os << ',' << format_double(b);
      os << '\n';
    }
  }

  json snaps = json::array();
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    if (!all_snapshots && k != 0 && k + 1 != traj.snapshots.size()) continue;
    char name[32];
    std::snprintf(name, sizeof name, "snap_%06zu.csv", k);
    const fs::path rel = fs::path("snapshots") / name;
    write_snapshot_file((root / rel).string(), traj.snapshots[k].field, traj.snapshots[k].time);
    snaps.push_back({{"file", rel.generic_string()}, {"t", traj.snapshots[k].time}});
  }

  json m;
  m["grid"] = {{"d", traj.grid.dim}, {"L", traj.grid.extent}, {"N", traj.grid.points}};
  m["p"] = traj.p;
  m["stop_reason"] = to_string(traj.stop_reason);
  m["failure"] = traj.failure;
  m["T_est"] = number(traj.T_est);
  m["steps"] = traj.steps();
  m["final_time"] = traj.final_time();
  m["snapshots"] = snaps;
  m["step_levels"] = traj.step_levels;
  if (noise) {
    json pts = json::array();
    for (const auto& x : noise->flat_points) pts.push_back({x[0], x[1]});
    m["noise"] = {{"kind", to_string(noise->kind)},
                  {"amplitude", noise->amplitude},
                  {"modes", noise->modes},
                  {"sigma", noise->sigma},
                  {"flat_points", pts},
                  {"seed", noise->seed},
                  {"temporal", noise->temporal == TemporalDriver::brownian ? "brownian" : "sinusoid"}};
  } else {
    m["noise"] = nullptr;
  }
  auto os = open_out(root / "trajectory.json");
  os << m.dump(2) << '\n';
}

TrajectoryDump read_trajectory(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream is(root / "trajectory.json", std::ios::binary);
  if (!is) throw Error("no trajectory manifest in " + dir);
  json m;
  try {
    is >> m;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed trajectory manifest: ") + e.what());
  }

  TrajectoryDump dump;
  Trajectory& traj = dump.trajectory;
  try {
    traj.grid = make_grid(m.at("grid").at("d").get<int>(), m.at("grid").at("L").get<double>(),
                          m.at("grid").at("N").get<std::size_t>());
    traj.p = m.at("p").get<double>();
    traj.stop_reason = parse_stop_reason(m.at("stop_reason").get<std::string>());
    traj.failure = m.value("failure", std::string());
    traj.T_est = as_number(m.at("T_est"));
    traj.step_levels = m.value("step_levels", std::vector<int>{});
    if (!m.at("noise").is_null()) {
      const json& n = m.at("noise");
      NoiseDescription d;
      d.kind = parse_profile_kind(n.at("kind").get<std::string>());
      d.amplitude = n.at("amplitude").get<double>();
      d.modes = n.at("modes").get<std::size_t>();
      d.sigma = n.at("sigma").get<double>();
      for (const auto& x : n.at("flat_points")) d.flat_points.push_back({x.at(0).get<double>(), x.at(1).get<double>()});
      d.seed = n.at("seed").get<std::uint64_t>();
      d.temporal = n.at("temporal").get<std::string>() == "sinusoid" ? TemporalDriver::sinusoid
                                                                     : TemporalDriver::brownian;
      dump.noise = d;
      traj.has_noise = true;
      traj.temporal = d.temporal;
    }
    for (const auto& s : m.at("snapshots")) {
      Snapshot snap = read_snapshot_file((root / s.at("file").get<std::string>()).string());
      require_same_grid(snap.field.grid, traj.grid);
      traj.snapshots.push_back(std::move(snap));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed trajectory manifest: ") + e.what());
  }

  std::size_t cols = 0;
  const auto rows = read_numeric_csv(root / "diagnostics.csv", cols);
  const std::size_t expected = diagnostics_header(traj.grid.dim).size();
  if (cols != expected) throw Error("diagnostics.csv has the wrong column count");
  for (const auto& r : rows) {
    DiagnosticRow d;
    std::size_t c = 0;
    d.t = r[c++];
    d.mass = r[c++];
    d.hamiltonian = r[c++];
    d.grad_norm = r[c++];
    d.lambda = r[c++];
    d.center[0] = r[c++];
    if (traj.grid.dim == 2) d.center[1] = r[c++];
    d.loc_mass = r[c++];
    d.residual = r[c++];
    traj.diagnostics.push_back(d);
  }

  if (traj.has_noise) {
    std::size_t pc = 0;
    const auto path = read_numeric_csv(root / "path.csv", pc);
    if (path.size() != traj.diagnostics.size()) throw Error("path.csv does not match diagnostics");
    for (const auto& r : path) traj.drive.emplace_back(r.begin() + 1, r.end());
  }
  return dump;
}

}  // namespace nlslab
