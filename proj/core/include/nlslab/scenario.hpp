#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlslab/evolution.hpp"
#include "nlslab/exact_solutions.hpp"
#include "nlslab/trajectory_io.hpp"

namespace nlslab {

enum class ScenarioKind {
  critical_blowup,
  multi_bubble,
  bourgain_wang,
  multi_soliton,
  nonpure_soliton,
  snls_gauge_check,
  loglog_supercritical,
  custom,
};

std::string to_string(ScenarioKind kind);

/// Parsed `key = value` scenario file. See README for the key reference.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::critical_blowup;
  GridSpec grid;
  double p = 5.0;

  BlowupParams blowup;
  SolitonParams solitons;
  std::optional<NoiseDescription> noise;

  double t0 = 0.0;
  double t1 = 1.0;
  double dt0 = 1e-3;
  std::size_t cadence = 10;
  double g_max = 1e3;
  double width_factor = 8.0;
  bool adaptive = true;
  int dt_level = 0;
  int max_level = 16;
  std::size_t max_steps = 0;
  std::vector<double> checkpoints;
  double loc_radius = 1.0;

  // regular profile z* = A exp(-|x - center|^2 / width^2), ||z*||_{H^1} = ratio ||Q||_{H^1}
  double z_amplitude_ratio = 0.05;
  Vec2 z_center{0.0, 0.0};
  double z_width = 1.0;
  double z_dt = 1e-3;

  // loglog_supercritical initial data
  double mass_ratio = 1.2;
  double gaussian_width = 1.0;
  std::string gaussian_shape = "ground_state";  // or "gaussian"

  std::string custom_initial;  // snapshot file for kind = custom

  std::size_t determinism_steps = 50;
  double virial_cutoff = 0.0;  // 0: uncut virial in the evolution check

  std::string output_dir;
  bool all_snapshots = false;  // output.snapshots = all | final
  std::size_t ensemble_size = 1;
  std::size_t threads = 0;  // 0: hardware concurrency

  std::map<std::string, std::string> entries;  // the file as read, for the summary
};

/// Throws ConfigError on unknown keys, malformed values, or missing kind-specific parameters.
ScenarioConfig parse_scenario(std::istream& is);
ScenarioConfig parse_scenario_file(const std::string& path);

/// Output directory with a relative path resolved against $NLSLAB_OUTPUT_ROOT when set.
std::string resolve_output_dir(const std::string& dir);

/// The evolution setup of a scenario (initial data, noise, stops, reference).
EvolveConfig build_evolve_config(const ScenarioConfig& config);

struct ScenarioResult {
  int exit_code = 0;  // 0 all hard checks pass, 1 a check failed, 3 numerical failure
  std::string summary_json;
  std::string output_dir;
  bool all_snapshots = false;  // output.snapshots = all | final
  std::vector<std::string> failed_checks;
  Trajectory trajectory;
};

/// Runs the trajectory and the diagnostics battery and writes
///   summary.json, trajectory/ (dump), checks/*.csv
/// into the output directory (if `write` is set).
ScenarioResult run_scenario(const ScenarioConfig& config, bool write = true);

struct EnsembleMember {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  StopReason stop_reason = StopReason::reached_t1;
  double stop_time = 0.0;
  std::size_t steps = 0;
  double T_est = 0.0;
  double mass_drift = 0.0;
};

struct EnsembleSummary {
  std::vector<EnsembleMember> members;  // in seed order
  double T_median = 0.0;
  double T_q1 = 0.0;
  double T_q3 = 0.0;
  double stop_median = 0.0;
  std::string summary_json;
};

/// Runs ensemble_size trajectories with seeds seed + index on `threads` workers.
/// Writes ensemble.csv and ensemble_summary.json when `write` is set.
EnsembleSummary run_ensemble(const ScenarioConfig& config, bool write = true);

struct DiagnoseOptions {
  double radius = 1.0;  // concentration ball
  double cutoff = 0.0;  // virial cutoff scale, 0 for the uncut virial
};

/// Diagnostics battery on a dumped trajectory. Returns the JSON report
/// {banica_ok, h_evo_max_residual, virial_series, T_est, alpha, loglog_score,
///  concentration: {R, fraction}} and writes per-check CSVs into csv_dir (if non-empty).
std::string diagnose_dump(const TrajectoryDump& dump, const DiagnoseOptions& options,
                          const std::string& csv_dir);

/// Aggregation over completed members (at least 2), in the given order.
EnsembleSummary ensemble_summary(std::vector<EnsembleMember> members);

}  // namespace nlslab
