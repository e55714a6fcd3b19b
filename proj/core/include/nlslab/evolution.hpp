#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/noise.hpp"

namespace nlslab {

/// One Strang step of  i v_t + Delta v + |v|^{p-1} v = 0:
/// half nonlinear phase, exact linear step in Fourier space, half nonlinear phase.
ComplexField step_strang(const ComplexField& v, double dt, double p);

/// One step of  i v_t + Delta v + a1.grad v + a0 v + |v|^{p-1} v = 0  as
/// C(dt/2) N(dt/2) L(dt) N(dt/2) C(dt/2); C is classical RK4 on v_t = i(a1.grad v + a0 v)
/// with the coefficients held fixed. When a1 and a0 vanish identically the C
/// substeps are skipped and the result equals step_strang bitwise.
/// Throws NumericalError if a substep produces non-finite values.
ComplexField step_gnls(const ComplexField& v, double dt, double p,
                       const LowerOrderCoefficients& coefficients);

enum class TemporalDriver {
  brownian,  // h_l = B_l, the stochastic equation through the gauge
  sinusoid,  // h_l(t) = sin t, a smooth deterministic drive
};

struct NoiseSpec {
  NoiseProfileSet profiles;
  std::uint64_t seed = 0;
  TemporalDriver temporal = TemporalDriver::brownian;
};

enum class StopReason {
  reached_t1,
  blowup_threshold,
  width_underresolved,
  step_limit,
  numerical_failure,
};

std::string to_string(StopReason reason);

struct EvolveConfig {
  GridSpec grid;
  double p = 5.0;
  ComplexField initial;  // X(t0); equals v(t0) since every path starts at 0
  double t0 = 0.0;
  double t1 = 1.0;
  double dt0 = 1e-3;
  std::optional<NoiseSpec> noise;
  std::size_t cadence = 1;  // snapshot every `cadence` accepted steps
  double g_max = std::numeric_limits<double>::infinity();
  double width_factor = 0.0;  // stop when lambda < width_factor * dx; 0 disables
  /// dt = dt0 2^-j with 2^-j <= min(1, (g(t0)/g(t))^2). Otherwise j = dt_level.
  bool adaptive = true;
  int dt_level = 0;
  int max_level = 16;  // finest dyadic level, with or without noise
  std::size_t max_steps = 0;  // 0: unlimited
  /// Times forced into the snapshot list; each must be a multiple of dt0 past t0.
  std::vector<double> checkpoints;
  double loc_radius = 1.0;  // radius of the loc_mass ball around the peak
  /// Reference solution for the `residual` column (L^2 distance), evaluated at
  /// snapshot steps; the column is NaN on other steps and when absent.
  std::function<ComplexField(double)> reference;
};

struct DiagnosticRow {
  double t = 0.0;
  double mass = 0.0;         // ||X||_{L^2}^2
  double hamiltonian = 0.0;  // H(X)
  double grad_norm = 0.0;    // ||grad X||_{L^2}
  double lambda = 0.0;       // ||grad Q|| / ||grad X||
  Vec2 center{0.0, 0.0};     // peak of |X|, quadratically refined
  double loc_mass = 0.0;     // mass within loc_radius of the center
  double residual = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  GridSpec grid;
  double p = 5.0;
  std::vector<Snapshot> snapshots;          // physical field X
  std::vector<DiagnosticRow> diagnostics;   // every accepted step, starting at t0
  std::vector<int> step_levels;             // dyadic level of each accepted step
  /// h_l at each diagnostic time, [row][mode]; empty without noise.
  std::vector<std::vector<double>> drive;
  bool has_noise = false;
  TemporalDriver temporal = TemporalDriver::brownian;
  StopReason stop_reason = StopReason::reached_t1;
  std::string failure;  // message of the failing substep, if any
  double T_est = std::numeric_limits<double>::quiet_NaN();

  std::size_t steps() const { return diagnostics.empty() ? 0 : diagnostics.size() - 1; }
  double final_time() const { return diagnostics.empty() ? 0.0 : diagnostics.back().t; }
};

/// Time integration with blow-up and resolution stops. Runs the gauged equation
/// for v and records X = e^{W} v. Deterministic given the config (and seed).
/// Throws PreconditionError on an invalid config; numerical failure is reported
/// through stop_reason with the last good snapshot retained.
Trajectory integrate(const EvolveConfig& config);

/// Linear fit of 1/g(t) over the last decade of growth of g, extrapolated to zero.
/// NaN when g grew by less than 2x or the fitted slope is not negative.
double estimate_blowup_time(const std::vector<DiagnosticRow>& rows);

/// z(t0) for the deterministic equation with z(T) = z_star, via
/// z(t) = conj(u(T - t)) where u solves forward from conj(z_star).
/// Requires ||z_star||_{H^1} <= smallness * ||Q||_{H^1}.
ComplexField backward_solve(const ComplexField& z_star, double T, double t0, double p,
                            double dt, double smallness = 0.1);

}  // namespace nlslab
