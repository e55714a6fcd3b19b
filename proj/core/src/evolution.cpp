#include "nlslab/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "nlslab/diagnostics.hpp"
#include "nlslab/error.hpp"
#include "nlslab/fft.hpp"
#include "nlslab/ground_state.hpp"

namespace nlslab {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::reached_t1: return "reached_t1";
    case StopReason::blowup_threshold: return "blowup_threshold";
    case StopReason::width_underresolved: return "width_underresolved";
    case StopReason::step_limit: return "step_limit";
    case StopReason::numerical_failure: return "numerical_failure";
  }
  return "reached_t1";
}

namespace {

void require_finite(const ComplexField& v, const char* where) {
  if (!v.all_finite()) throw NumericalError(std::string("non-finite values after ") + where);
}

double nonlinear_amplitude(double modulus_sq, double p) {
  if (p == 5.0) return modulus_sq * modulus_sq;
  if (p == 3.0) return modulus_sq;
  return std::pow(modulus_sq, 0.5 * (p - 1.0));
}

bool vanishes(const LowerOrderCoefficients& c) {
  auto zero = [](const ComplexField& f) {
    return std::all_of(f.values.begin(), f.values.end(), [](cplx z) { return z == cplx(0.0); });
  };
  return zero(c.a0) && std::all_of(c.a1.begin(), c.a1.end(), zero);
}

/// e^{i theta} with the modulus as close to 1 as doubles allow: the rounded
/// cos/sin pair is replaced by the neighbour pair minimizing |c^2 + s^2 - 1|.
/// A cached multiplier is applied thousands of times, so a fixed modulus error
/// of a few 1e-17 would otherwise accumulate into a visible mass drift.
cplx unit_phase(double theta) {
  const long double th = theta;
  const double c0 = static_cast<double>(std::cos(th));
  const double s0 = static_cast<double>(std::sin(th));
  double best_c = c0, best_s = s0;
  long double best = std::numeric_limits<long double>::max();
  for (int a = -2; a <= 2; ++a) {
    double c = c0;
    for (int i = 0; i < std::abs(a); ++i) c = std::nextafter(c, a < 0 ? -2.0 : 2.0);
    for (int b = -2; b <= 2; ++b) {
      double s = s0;
      for (int i = 0; i < std::abs(b); ++i) s = std::nextafter(s, b < 0 ? -2.0 : 2.0);
      const long double err = std::fabs(static_cast<long double>(c) * c +
                                        static_cast<long double>(s) * s - 1.0L);
      if (err < best) {
        best = err;
        best_c = c;
        best_s = s;
      }
    }
  }
  return {best_c, best_s};
}

/// Split-step machinery with cached linear multipliers e^{-i|k|^2 dt}.
class Propagator {
 public:
  explicit Propagator(const GridSpec& grid) : grid_(grid), k2_(grid.size()) {
    const auto k = grid.wavenumbers();
    if (grid.dim == 1) {
      for (std::size_t i = 0; i < grid.points; ++i) k2_[i] = k[i] * k[i];
    } else {
      for (std::size_t i = 0; i < grid.points; ++i)
        for (std::size_t j = 0; j < grid.points; ++j)
          k2_[i * grid.points + j] = k[i] * k[i] + k[j] * k[j];
    }
    spectrum_.resize(grid.size());
  }

  ComplexField strang(const ComplexField& v, double dt, double p) {
    ComplexField u = v;
    const long double before = sum_norm(u.values);
    nonlinear(u, 0.5 * dt, p);
    linear(u, dt);
    nonlinear(u, 0.5 * dt, p);
    require_finite(u, "the Strang step");
    compensate(u, before);
    return u;
  }

  ComplexField gnls(const ComplexField& v, double dt, double p, const LowerOrderCoefficients& c) {
    if (vanishes(c)) return strang(v, dt, p);
    ComplexField u = v;
    lower_order(u, 0.5 * dt, c);
    require_finite(u, "the lower-order substep");
    const long double before = sum_norm(u.values);
    nonlinear(u, 0.5 * dt, p);
    linear(u, dt);
    nonlinear(u, 0.5 * dt, p);
    require_finite(u, "the Strang substep");
    compensate(u, before);
    lower_order(u, 0.5 * dt, c);
    require_finite(u, "the lower-order substep");
    return u;
  }

 private:
  static void nonlinear(ComplexField& u, double dt, double p) {
    for (auto& z : u.values) z *= std::polar(1.0, nonlinear_amplitude(std::norm(z), p) * dt);
  }

  const std::vector<cplx>& multiplier(double dt) {
    auto it = multipliers_.find(dt);
    if (it != multipliers_.end()) return it->second;
    if (multipliers_.size() > 64) multipliers_.clear();
    std::vector<cplx> m(k2_.size());
    for (std::size_t i = 0; i < k2_.size(); ++i) m[i] = unit_phase(-k2_[i] * dt);
    return multipliers_.emplace(dt, std::move(m)).first->second;
  }

  void linear(ComplexField& u, double dt) {
    const auto& m = multiplier(dt);
    fft_forward(grid_, u.values, spectrum_);
    for (std::size_t i = 0; i < spectrum_.size(); ++i) spectrum_[i] *= m[i];
    fft_backward(grid_, spectrum_, u.values);
  }

  static long double sum_norm(const std::vector<cplx>& values) {
    long double s = 0.0L;
    for (const auto& z : values) s += static_cast<long double>(std::norm(z));
    return s;
  }

  // N L N conserves sum |u|^2 exactly in exact arithmetic. In doubles, rotating
  // a value by a small angle loses the second-order shrink of the real part to
  // rounding, so the low modes gain ~1e-16 of relative mass per step, always
  // with the same sign. The loss is accumulated here and paid back by a scalar
  // rescale once it is large enough to be representable. A step that moves the
  // mass by more than roundoff is an error, not something to absorb.
  void compensate(ComplexField& u, long double before) {
    const long double after = sum_norm(u.values);
    if (!(before > 0.0L) || !std::isfinite(after)) return;
    const long double change = after - before;
    if (std::fabs(change) > kUnitarityTolerance * before)
      throw NumericalError("a split step changed the mass beyond roundoff");
    pending_ -= change;
    if (std::fabs(pending_) < kCompensationQuantum * after) return;
    const double factor = static_cast<double>(std::sqrt((after + pending_) / after));
    for (auto& z : u.values) z *= factor;
    pending_ -= sum_norm(u.values) - after;
  }

  static constexpr long double kUnitarityTolerance = 1e-12L;
  static constexpr long double kCompensationQuantum = 1e-15L;
  long double pending_ = 0.0L;


  // u_t = i (a1 . grad u + a0 u), classical RK4.
  static ComplexField drift(const ComplexField& u, const LowerOrderCoefficients& c) {
    const auto grad = gradient(u);
    ComplexField out(u.grid);
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
      cplx s = c.a0[i] * u[i];
      for (std::size_t a = 0; a < grad.size(); ++a) s += c.a1[a][i] * grad[a][i];
      out[i] = I * s;
    }
    return out;
  }

  static void lower_order(ComplexField& u, double dt, const LowerOrderCoefficients& c) {
    const ComplexField k1 = drift(u, c);
    ComplexField stage = u;
    for (std::size_t i = 0; i < u.size(); ++i) stage[i] = u[i] + 0.5 * dt * k1[i];
    const ComplexField k2 = drift(stage, c);
    for (std::size_t i = 0; i < u.size(); ++i) stage[i] = u[i] + 0.5 * dt * k2[i];
    const ComplexField k3 = drift(stage, c);
    for (std::size_t i = 0; i < u.size(); ++i) stage[i] = u[i] + dt * k3[i];
    const ComplexField k4 = drift(stage, c);
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }

  GridSpec grid_;
  std::vector<double> k2_;
  std::vector<cplx> spectrum_;
  std::map<double, std::vector<cplx>> multipliers_;
};

constexpr int kTickBits = 30;
constexpr std::uint64_t kTicks = std::uint64_t{1} << kTickBits;

/// Temporal drive h_l at dyadic nodes of the base grid. Brownian values are
/// generated one base interval at a time, at the levels actually visited.
class Drive {
 public:
  Drive(const NoiseSpec& spec, const std::vector<double>& base_times)
      : spec_(spec), base_times_(base_times) {
    if (spec.temporal == TemporalDriver::brownian)
      path_ = BrownianPath::sample(spec.seed, base_times, spec.profiles.modes);
  }

  std::vector<double> at(std::size_t interval, std::uint64_t tick, int level, double t) {
    const std::size_t modes = spec_.profiles.modes;
    std::vector<double> h(modes);
    if (spec_.temporal == TemporalDriver::sinusoid) {
      std::fill(h.begin(), h.end(), std::sin(t));
      return h;
    }
    if (tick == 0) {
      for (std::size_t l = 0; l < modes; ++l) h[l] = path_.value(l, interval);
      return h;
    }
    if (interval != interval_) {
      tables_.clear();
      interval_ = interval;
    }
    auto it = tables_.find(level);
    if (it == tables_.end()) {
      std::vector<std::vector<double>> table(modes);
      for (std::size_t l = 0; l < modes; ++l) table[l] = path_.interval_values(l, interval, level);
      it = tables_.emplace(level, std::move(table)).first;
    }
    const std::size_t index = static_cast<std::size_t>(tick >> (kTickBits - level));
    for (std::size_t l = 0; l < modes; ++l) h[l] = it->second[l][index];
    return h;
  }

 private:
  const NoiseSpec& spec_;
  const std::vector<double>& base_times_;
  BrownianPath path_;
  std::size_t interval_ = static_cast<std::size_t>(-1);
  std::map<int, std::vector<std::vector<double>>> tables_;
};

}  // namespace

ComplexField step_strang(const ComplexField& v, double dt, double p) {
  if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
  Propagator prop(v.grid);
  return prop.strang(v, dt, p);
}

ComplexField step_gnls(const ComplexField& v, double dt, double p,
                       const LowerOrderCoefficients& coefficients) {
  if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
  require_same_grid(v.grid, coefficients.a0.grid);
  Propagator prop(v.grid);
  return prop.gnls(v, dt, p, coefficients);
}

double estimate_blowup_time(const std::vector<DiagnosticRow>& rows) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (rows.size() < 3) return nan;
  const double g_last = rows.back().grad_norm;
  if (!(g_last >= 2.0 * rows.front().grad_norm)) return nan;
  std::size_t first = rows.size() - 1;
  while (first > 0 && rows[first - 1].grad_norm >= 0.1 * g_last) --first;
  const std::size_t n = rows.size() - first;
  if (n < 3) return nan;
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = first; i < rows.size(); ++i) {
    tm += rows[i].t;
    ym += 1.0 / rows[i].grad_norm;
  }
  tm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = first; i < rows.size(); ++i) {
    const double dx = rows[i].t - tm;
    sxy += dx * (1.0 / rows[i].grad_norm - ym);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0)) return nan;
  const double slope = sxy / sxx;
  if (!(slope < 0.0)) return nan;
  return tm - ym / slope;
}

Trajectory integrate(const EvolveConfig& cfg) {
  const GridSpec& grid = cfg.grid;
  require_same_grid(cfg.initial.grid, grid);
  if (!cfg.initial.all_finite()) throw PreconditionError("initial field is not finite");
  if (!(cfg.dt0 > 0.0)) throw PreconditionError("dt0 must be positive");
  if (!(cfg.t1 > cfg.t0)) throw PreconditionError("t1 must exceed t0");
  if (cfg.cadence < 1) throw PreconditionError("snapshot cadence must be at least 1");
  if (!(cfg.p > 1.0)) throw PreconditionError("nonlinearity exponent must exceed 1");
  if (cfg.max_level < 0 || cfg.max_level >= kTickBits)
    throw PreconditionError("max_level must be in [0, 29]");
  if (cfg.dt_level < 0 || cfg.dt_level > cfg.max_level)
    throw PreconditionError("dt_level must be in [0, max_level]");
  if (cfg.width_factor < 0.0) throw PreconditionError("width factor must be nonnegative");
  if (cfg.noise) require_same_grid(cfg.noise->profiles.grid, grid);

  // Base step grid t0, t0 + dt0, ..., t1 (the last interval may be shorter).
  const double span = cfg.t1 - cfg.t0;
  const auto intervals = static_cast<std::size_t>(std::ceil(span / cfg.dt0 - 1e-9));
  if (intervals > 100000000) throw PreconditionError("too many base steps");
  std::vector<double> base(intervals + 1);
  for (std::size_t i = 0; i < intervals; ++i) base[i] = cfg.t0 + static_cast<double>(i) * cfg.dt0;
  base[intervals] = cfg.t1;

  std::set<std::size_t> checkpoint_nodes;
  for (double c : cfg.checkpoints) {
    const double x = (c - cfg.t0) / cfg.dt0;
    const double idx = std::round(x);
    if (idx < 0.0 || idx > static_cast<double>(intervals) || std::abs(x - idx) > 1e-6)
      throw PreconditionError("checkpoint is not a base grid node");
    checkpoint_nodes.insert(static_cast<std::size_t>(idx));
  }

  auto time_at = [&](std::size_t i, std::uint64_t tick) {
    if (tick == 0) return base[i];
    return base[i] + (base[i + 1] - base[i]) * (static_cast<double>(tick) / static_cast<double>(kTicks));
  };

  std::optional<Drive> drive;
  if (cfg.noise) drive.emplace(*cfg.noise, base);

  const double q_grad = std::sqrt(ground_state_gradient_sq(grid.dim, cfg.p));
  const double dx = grid.spacing();

  Trajectory traj;
  traj.grid = grid;
  traj.p = cfg.p;
  traj.has_noise = cfg.noise.has_value();
  if (cfg.noise) traj.temporal = cfg.noise->temporal;

  auto make_row = [&](const ComplexField& X, double t, bool with_residual) {
    DiagnosticRow row;
    row.t = t;
    row.mass = l2_norm_sq(X);
    const double g2 = gradient_norm_sq(X);
    row.grad_norm = std::sqrt(g2);
    row.hamiltonian = 0.5 * g2 - lp_integral(X, cfg.p + 1.0) / (cfg.p + 1.0);
    row.lambda = row.grad_norm > 0.0 ? q_grad / row.grad_norm : std::numeric_limits<double>::infinity();
    row.center = peak_center(X);
    row.loc_mass = localized_mass(X, row.center, cfg.loc_radius);
    if (cfg.reference && with_residual) {
      const ComplexField ref = cfg.reference(t);
      row.residual = std::sqrt(l2_norm_sq(X - ref));
    }
    return row;
  };

  auto physical = [&](const ComplexField& v, const std::vector<double>& h) {
    return cfg.noise ? gauge_transform(v, cfg.noise->profiles, h, GaugeDirection::to_physical) : v;
  };

  std::size_t interval = 0;
  std::uint64_t tick = 0;
  double t = cfg.t0;
  std::vector<double> h = drive ? drive->at(0, 0, 0, t) : std::vector<double>{};
  ComplexField v = cfg.noise
      ? gauge_transform(cfg.initial, cfg.noise->profiles, h, GaugeDirection::to_gauged)
      : cfg.initial;
  ComplexField X = cfg.initial;

  const double g_ref = std::sqrt(gradient_norm_sq(v));
  if (!(cfg.g_max > g_ref)) throw PreconditionError("g_max must exceed the initial gradient norm");

  traj.diagnostics.push_back(make_row(X, t, true));
  traj.snapshots.push_back({X, t});
  if (drive) traj.drive.push_back(h);
  traj.step_levels.push_back(0);

  Propagator prop(grid);
  double g_v = g_ref;
  int level = cfg.adaptive ? 0 : cfg.dt_level;
  std::size_t steps = 0;
  bool stopped = false;

  while (!stopped) {
    if (cfg.adaptive) {
      const double ratio = g_ref > 0.0 ? std::min(1.0, (g_ref / g_v) * (g_ref / g_v)) : 1.0;
      int target = 0;
      // 1% slack so that O(dt^2) wiggles of a flat gradient norm do not halve dt.
      while (target < cfg.max_level && std::ldexp(1.0, -target) > 1.01 * ratio) ++target;
      level = target;
    }
    // A coarser step is only taken from a node of the coarser grid.
    while ((tick & ((kTicks >> level) - 1)) != 0) ++level;

    const std::uint64_t step_ticks = kTicks >> level;
    const double dt = (base[interval + 1] - base[interval]) * std::ldexp(1.0, -level);

    ComplexField next;
    try {
      if (drive) {
        const std::uint64_t mid = tick + step_ticks / 2;
        const auto h_mid = drive->at(interval, mid, level + 1, time_at(interval, mid));
        next = prop.gnls(v, dt, cfg.p, lower_order_coefficients(cfg.noise->profiles, h_mid));
      } else {
        next = prop.strang(v, dt, cfg.p);
      }
    } catch (const NumericalError& e) {
      traj.stop_reason = StopReason::numerical_failure;
      traj.failure = e.what();
      break;
    }

    tick += step_ticks;
    if (tick == kTicks) {
      ++interval;
      tick = 0;
    }
    t = time_at(interval, tick);
    if (drive) h = drive->at(interval, tick, level, t);
    v = std::move(next);
    X = physical(v, h);
    g_v = drive ? std::sqrt(gradient_norm_sq(v)) : 0.0;

    if (!drive) g_v = std::sqrt(gradient_norm_sq(v));
    if (!std::isfinite(g_v)) {
      traj.stop_reason = StopReason::numerical_failure;
      traj.failure = "non-finite gradient norm";
      break;
    }
    ++steps;

    const double lambda_v = g_v > 0.0 ? q_grad / g_v : std::numeric_limits<double>::infinity();
    if (g_v >= cfg.g_max) {
      traj.stop_reason = StopReason::blowup_threshold;
      stopped = true;
    } else if (cfg.width_factor > 0.0 && lambda_v < cfg.width_factor * dx) {
      traj.stop_reason = StopReason::width_underresolved;
      stopped = true;
    } else if (interval == intervals) {
      traj.stop_reason = StopReason::reached_t1;
      stopped = true;
    } else if (cfg.max_steps > 0 && steps >= cfg.max_steps) {
      traj.stop_reason = StopReason::step_limit;
      stopped = true;
    }

    const bool checkpoint = tick == 0 && checkpoint_nodes.count(interval) > 0;
    const bool snapshot = stopped || checkpoint || steps % cfg.cadence == 0;
    traj.diagnostics.push_back(make_row(X, t, snapshot));
    traj.step_levels.push_back(level);
    if (drive) traj.drive.push_back(h);
    if (snapshot) traj.snapshots.push_back({X, t});
  }

  if (traj.snapshots.back().time != traj.diagnostics.back().t)
    traj.snapshots.push_back({X, traj.diagnostics.back().t});
  traj.T_est = estimate_blowup_time(traj.diagnostics);
  return traj;
}

ComplexField backward_solve(const ComplexField& z_star, double T, double t0, double p, double dt,
                            double smallness) {
  if (!(T >= t0)) throw PreconditionError("backward solve needs T >= t0");
  if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
  const int d = z_star.grid.dim;
  const double z_h1 = std::sqrt(l2_norm_sq(z_star) + gradient_norm_sq(z_star));
  const double q_h1 = std::sqrt(ground_state_mass(d, p) + ground_state_gradient_sq(d, p));
  if (z_h1 > smallness * q_h1)
    throw PreconditionError("regular profile violates the smallness condition");
  if (T == t0) return z_star;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::round((T - t0) / dt)));
  const double h = (T - t0) / static_cast<double>(n);
  Propagator prop(z_star.grid);
  ComplexField u = conj(z_star);
  for (std::size_t k = 0; k < n; ++k) u = prop.strang(u, h, p);
  return conj(std::move(u));
}

}  // namespace nlslab
