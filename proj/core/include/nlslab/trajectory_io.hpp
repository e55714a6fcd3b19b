#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlslab/evolution.hpp"
#include "nlslab/noise.hpp"

namespace nlslab {

/// Enough to rebuild the noise profiles of a dumped run.
struct NoiseDescription {
  ProfileKind kind = ProfileKind::constant;
  double amplitude = 0.0;
  std::size_t modes = 1;
  double sigma = 2.0;
  std::vector<Vec2> flat_points;
  std::uint64_t seed = 0;
  TemporalDriver temporal = TemporalDriver::brownian;

  NoiseProfileSet build(const GridSpec& grid) const;
};

struct TrajectoryDump {
  Trajectory trajectory;
  std::optional<NoiseDescription> noise;
};

/// Column names of diagnostics.csv for a grid of dimension d.
std::vector<std::string> diagnostics_header(int dim);

/// Writes into `dir` (created if needed):
///   trajectory.json   manifest (grid, p, stop reason, T_est, noise, snapshot index)
///   diagnostics.csv   one row per accepted step
///   path.csv          t,B_1..B_N per accepted step (noise runs only)
///   snapshots/snap_NNNNNN.csv  (all snapshots, or only the first and last)
void write_trajectory(const Trajectory& traj, const std::string& dir,
                      const std::optional<NoiseDescription>& noise = std::nullopt,
                      bool all_snapshots = true);

/// Inverse of write_trajectory. Throws Error on missing or malformed files.
TrajectoryDump read_trajectory(const std::string& dir);

/// Plain CSV: header line, then one line per row, 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

}  // namespace nlslab
