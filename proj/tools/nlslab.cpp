// nlslab: command line front end for the NLS laboratory.
//
//   nlslab ground-state --dim 1 --p 5 --L 40 --N 1024 --tol 1e-10 [--out DIR]
//   nlslab evolve <config>
//   nlslab diagnose <trajectory-dir> [--radius R] [--cutoff m] [--out DIR]
//   nlslab scenario run <config>
//   nlslab scenario ensemble <config> [--threads K]
//
// Exit codes: 0 success, 1 a hard check failed, 2 bad command line or config,
// 3 numerical failure (partial artifacts kept).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nlslab/diagnostics.hpp"
#include "nlslab/error.hpp"
#include "nlslab/evolution.hpp"
#include "nlslab/ground_state.hpp"
#include "nlslab/scenario.hpp"
#include "nlslab/trajectory_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw nlslab::Error("cannot write " + path.string());
  os << text;
}

struct GroundStateArgs {
  int dim = 1;
  double p = 0.0;  // 0: critical exponent
  double L = 40.0;
  std::size_t N = 1024;
  double tol = 1e-10;
  std::string out = "out/ground_state";
};

int run_ground_state(const GroundStateArgs& a) {
  const double p = a.p > 0.0 ? a.p : nlslab::critical_exponent(a.dim);
  const nlslab::GridSpec grid = nlslab::make_grid(a.dim, a.L, a.N);
  const nlslab::GroundState q = nlslab::solve_ground_state(grid, p, a.tol);
  const nlslab::VariationalIdentities vi = nlslab::variational_identities(q);

  // Q(0): the value at the box center.
  double q0 = 0.0;
  for (const auto& z : q.field.values) q0 = std::max(q0, std::abs(z));

  json rec;
  rec["dim"] = a.dim;
  rec["p"] = p;
  rec["L"] = a.L;
  rec["N"] = a.N;
  rec["mass"] = q.mass;
  rec["H"] = vi.hamiltonian;
  rec["residual"] = q.residual;
  rec["Q0"] = q0;
  rec["iterations"] = q.iterations;

  const fs::path out(nlslab::resolve_output_dir(a.out));
  fs::create_directories(out);
  nlslab::write_snapshot_file((out / "ground_state.csv").string(), q.field, 0.0);
  write_text(out / "ground_state.json", rec.dump(2) + "\n");
  std::cout << rec.dump(2) << "\n";
  return kOk;
}

int run_evolve(const std::string& file) {
  const nlslab::ScenarioConfig config = nlslab::parse_scenario_file(file);
  const nlslab::EvolveConfig ev = nlslab::build_evolve_config(config);
  const nlslab::Trajectory traj = nlslab::integrate(ev);

  const fs::path out(nlslab::resolve_output_dir(config.output_dir));
  nlslab::write_trajectory(traj, (out / "trajectory").string(), config.noise, true);

  json s;
  s["stop_reason"] = nlslab::to_string(traj.stop_reason);
  s["final_time"] = traj.final_time();
  s["steps"] = traj.steps();
  s["T_est"] = finite_or_null(traj.T_est);
  if (!traj.failure.empty()) s["failure"] = traj.failure;
  std::cout << s.dump(2) << "\n";
  return traj.stop_reason == nlslab::StopReason::numerical_failure ? kNumerical : kOk;
}

struct DiagnoseArgs {
  std::string dir;
  double radius = 1.0;
  double cutoff = 0.0;
  std::string out;  // default: <dir>/diagnose
};

int run_diagnose(const DiagnoseArgs& a) {
  const nlslab::TrajectoryDump dump = nlslab::read_trajectory(a.dir);
  const fs::path out = a.out.empty() ? fs::path(a.dir) / "diagnose" : fs::path(a.out);
  const std::string report =
      nlslab::diagnose_dump(dump, {a.radius, a.cutoff}, out.string());
  write_text(out / "report.json", report);
  std::cout << report;
  return kOk;
}

int run_scenario_file(const std::string& file) {
  const nlslab::ScenarioConfig config = nlslab::parse_scenario_file(file);
  const nlslab::ScenarioResult r = nlslab::run_scenario(config, true);
  std::cout << r.summary_json;
  for (const auto& c : r.failed_checks) std::cerr << "check failed: " << c << "\n";
  return r.exit_code;
}

int run_ensemble_file(const std::string& file, std::size_t threads, std::size_t size) {
  nlslab::ScenarioConfig config = nlslab::parse_scenario_file(file);
  if (threads > 0) config.threads = threads;
  if (size > 0) config.ensemble_size = size;
  if (config.ensemble_size < 2) throw nlslab::ConfigError("ensemble.size must be at least 2");
  const nlslab::EnsembleSummary s = nlslab::run_ensemble(config, true);
  std::cout << s.summary_json;
  for (const auto& m : s.members)
    if (m.stop_reason == nlslab::StopReason::numerical_failure) return kNumerical;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and diagnostics for focusing nonlinear Schroedinger equations"};
  app.require_subcommand(1);

  GroundStateArgs gs;
  auto* gs_cmd = app.add_subcommand("ground-state", "Solve for the ground state Q on a grid");
  gs_cmd->add_option("--dim,-d", gs.dim, "Dimension (1 or 2)")->check(CLI::IsMember({1, 2}));
  gs_cmd->add_option("--p", gs.p, "Nonlinearity exponent (default: 1 + 4/d)");
  gs_cmd->add_option("--L", gs.L, "Box side length")->check(CLI::PositiveNumber);
  gs_cmd->add_option("--N", gs.N, "Grid points per axis")->check(CLI::PositiveNumber);
  gs_cmd->add_option("--tol", gs.tol, "Elliptic residual target")->check(CLI::PositiveNumber);
  gs_cmd->add_option("--out,-o", gs.out, "Output directory");

  std::string evolve_file;
  auto* ev_cmd = app.add_subcommand("evolve", "Integrate a scenario and dump the trajectory");
  ev_cmd->add_option("config", evolve_file, "Scenario config file")->required();

  DiagnoseArgs dg;
  auto* dg_cmd = app.add_subcommand("diagnose", "Run the diagnostics battery on a trajectory dump");
  dg_cmd->add_option("dir", dg.dir, "Trajectory directory (holds trajectory.json)")->required();
  dg_cmd->add_option("--radius,-R", dg.radius, "Concentration radius")->check(CLI::PositiveNumber);
  dg_cmd->add_option("--cutoff", dg.cutoff, "Virial cutoff scale m (0: uncut)")
      ->check(CLI::NonNegativeNumber);
  dg_cmd->add_option("--out,-o", dg.out, "Report directory");

  auto* sc_cmd = app.add_subcommand("scenario", "Scenario runner");
  sc_cmd->require_subcommand(1);
  std::string run_file;
  auto* run_cmd = sc_cmd->add_subcommand("run", "Run one scenario with all checks");
  run_cmd->add_option("config", run_file, "Scenario config file")->required();
  std::string ens_file;
  std::size_t threads = 0;
  std::size_t size = 0;
  auto* ens_cmd = sc_cmd->add_subcommand("ensemble", "Run a seeded ensemble of a scenario");
  ens_cmd->add_option("config", ens_file, "Scenario config file")->required();
  ens_cmd->add_option("--threads,-j", threads, "Worker threads (default: config or all cores)");
  ens_cmd->add_option("--size,-n", size, "Ensemble size (overrides ensemble.size)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gs_cmd) return run_ground_state(gs);
    if (*ev_cmd) return run_evolve(evolve_file);
    if (*dg_cmd) return run_diagnose(dg);
    if (*run_cmd) return run_scenario_file(run_file);
    if (*ens_cmd) return run_ensemble_file(ens_file, threads, size);
  } catch (const nlslab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlslab::PreconditionError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const nlslab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const nlslab::ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
