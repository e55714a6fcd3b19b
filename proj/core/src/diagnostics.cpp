#include "nlslab/diagnostics.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "nlslab/error.hpp"
#include "nlslab/fft.hpp"

namespace nlslab {

namespace {

double dist2(const Vec2& x, const Vec2& c) {
  const double a = x[0] - c[0];
  const double b = x[1] - c[1];
  return a * a + b * b;
}

double energy(const ComplexField& v, double p) {
  return 0.5 * gradient_norm_sq(v) - lp_integral(v, p + 1.0) / (p + 1.0);
}

double critical_mass(int dim) { return ground_state_mass(dim, critical_exponent(dim)); }

}  // namespace

Functionals functionals(const ComplexField& v) {
  const NormSuite n = norm_suite(v);
  Functionals f;
  f.mass = n.l2 * n.l2;
  f.l2_norm = n.l2;
  f.grad_norm = n.gradient;
  f.hamiltonian = hamiltonian(v);
  f.sigma_norm = n.sigma;
  return f;
}

// --- Banica ------------------------------------------------------------------

BanicaResult banica_check(const ComplexField& v, std::span<const RealField> grad_phi,
                          double q_mass) {
  const int d = v.grid.dim;
  if (grad_phi.size() != static_cast<std::size_t>(d))
    throw PreconditionError("gradient of phi needs one component per axis");
  for (const auto& g : grad_phi) require_same_grid(g.grid, v.grid);
  if (q_mass <= 0.0) q_mass = critical_mass(d);
  if (std::sqrt(l2_norm_sq(v)) > std::sqrt(q_mass) + 1e-8)
    throw PreconditionError("mass exceeds the ground-state mass; the estimate does not apply");

  const auto grad = gradient(v);
  const double dV = v.grid.cell_volume();
  double im = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double gphi_sq = 0.0;
    for (std::size_t a = 0; a < grad.size(); ++a) {
      const double gphi = grad_phi[a].values[i];
      im += (v[i] * std::conj(grad[a][i])).imag() * gphi;
      gphi_sq += gphi * gphi;
    }
    weighted += std::norm(v[i]) * gphi_sq;
  }
  BanicaResult r;
  r.lhs = std::abs(im * dV);
  r.rhs = std::sqrt(std::max(0.0, 2.0 * hamiltonian(v) * weighted * dV));
  r.satisfied = r.lhs <= r.rhs + 1e-10;
  return r;
}

BanicaResult banica_check(const ComplexField& v, const NoiseProfileSet& profiles, double q_mass) {
  return banica_check(v, profiles.grad, q_mass);
}

// --- Hamiltonian evolution ----------------------------------------------------------

HamiltonianEvolution hamiltonian_evolution_residual(const Trajectory& traj,
                                                    const NoiseProfileSet& profiles) {
  if (!traj.has_noise || traj.temporal != TemporalDriver::brownian || traj.drive.empty())
    throw PreconditionError("trajectory carries no Brownian increments");
  require_same_grid(traj.grid, profiles.grid);
  const std::size_t modes = profiles.modes;
  const double dV = traj.grid.cell_volume();

  HamiltonianEvolution out;
  double h1 = 0.0, h2 = 0.0;
  double prev_a = 0.0, prev_b = 0.0, prev_t = 0.0;
  std::vector<double> prev_B;
  double h0 = 0.0;

  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const Snapshot& s = traj.snapshots[k];
    const auto row_it = std::lower_bound(
        traj.diagnostics.begin(), traj.diagnostics.end(), s.time,
        [](const DiagnosticRow& r, double t) { return r.t < t; });
    if (row_it == traj.diagnostics.end() || row_it->t != s.time)
      throw PreconditionError("snapshot time missing from the diagnostics");
    const auto& B = traj.drive[static_cast<std::size_t>(row_it - traj.diagnostics.begin())];

    const ComplexField& X = s.field;
    const auto grad = gradient(X);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      double gphi_sq = 0.0;
      for (std::size_t c = 0; c < grad.size(); ++c) {
        const double gphi = profiles.grad[c].values[i];
        gphi_sq += gphi * gphi;
        b += (X[i] * std::conj(grad[c][i])).imag() * gphi;
      }
      a += gphi_sq * std::norm(X[i]);
    }
    a *= dV * static_cast<double>(modes);
    b *= dV;

    const double h = energy(X, traj.p);
    if (k == 0) {
      h0 = h;
    } else {
      h1 += 0.25 * (prev_a + a) * (s.time - prev_t);
      double dB = 0.0;
      for (std::size_t l = 0; l < modes; ++l) dB += B[l] - prev_B[l];
      h2 -= prev_b * dB;
    }
    out.t.push_back(s.time);
    out.h.push_back(h);
    out.h1.push_back(h1);
    out.h2.push_back(h2);
    const double r = h - h0 - h1 - h2;
    out.residual.push_back(r);
    out.max_abs_residual = std::max(out.max_abs_residual, std::abs(r));
    prev_a = a;
    prev_b = b;
    prev_t = s.time;
    prev_B = B;
  }
  return out;
}

// --- virial -----------------------------------------------------------------------

namespace {

double bump(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

// 1 on s <= 0, 0 on s >= 1.
double smoothstep(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double a = bump(1.0 - s);
  return a / (a + bump(s));
}

double smoothstep_prime(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = bump(1.0 - s);
  const double b = bump(s);
  const double da = -a / ((1.0 - s) * (1.0 - s));
  const double db = b / (s * s);
  return (da * b - a * db) / ((a + b) * (a + b));
}

}  // namespace

double CutoffSpec::theta(double r) { return r * r * smoothstep(0.5 * (r - 1.0)); }

double CutoffSpec::theta_prime(double r) {
  const double s = 0.5 * (r - 1.0);
  return 2.0 * r * smoothstep(s) + 0.5 * r * r * smoothstep_prime(s);
}

CutoffSpec make_cutoff(double m) {
  if (!(m > 0.0)) throw PreconditionError("cutoff scale must be positive");
  CutoffSpec c;
  c.m = m;
  constexpr int samples = 30000;
  for (int i = 1; i < samples; ++i) {
    const double r = 3.0 * i / samples;
    const double th = CutoffSpec::theta(r);
    if (th < 1e-300) continue;
    const double dp = CutoffSpec::theta_prime(r);
    c.C = std::max(c.C, dp * dp / th);
  }
  return c;
}

double virial(const ComplexField& v, const Vec2& center, const std::optional<CutoffSpec>& cutoff) {
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r2 = dist2(v.grid.point(i), center);
    double w = r2;
    if (cutoff) w = cutoff->m * cutoff->m * CutoffSpec::theta(std::sqrt(r2) / cutoff->m);
    sum += w * std::norm(v[i]);
  }
  return sum * v.grid.cell_volume();
}

namespace {

// 2 Im int conj(X) grad(theta) . grad X
double virial_drift(const ComplexField& X, const Vec2& center,
                    const std::optional<CutoffSpec>& cutoff) {
  const auto grad = gradient(X);
  double sum = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const Vec2 x = X.grid.point(i);
    Vec2 gth{2.0 * (x[0] - center[0]), 2.0 * (x[1] - center[1])};
    if (cutoff) {
      const double r = std::sqrt(dist2(x, center));
      const double scale = r > 0.0 ? cutoff->m * CutoffSpec::theta_prime(r / cutoff->m) / r : 0.0;
      gth = {scale * (x[0] - center[0]), scale * (x[1] - center[1])};
    }
    for (std::size_t a = 0; a < grad.size(); ++a)
      sum += gth[a] * (std::conj(X[i]) * grad[a][i]).imag();
  }
  return 2.0 * sum * X.grid.cell_volume();
}

}  // namespace

VirialEvolution virial_evolution_residual(const Trajectory& traj, const Vec2& center,
                                          const std::optional<CutoffSpec>& cutoff) {
  VirialEvolution out;
  double integral = 0.0, prev_drift = 0.0, prev_t = 0.0, v0 = 0.0;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const Snapshot& s = traj.snapshots[k];
    const double V = virial(s.field, center, cutoff);
    const double drift = virial_drift(s.field, center, cutoff);
    if (k == 0) {
      v0 = V;
    } else {
      integral += 0.5 * (prev_drift + drift) * (s.time - prev_t);
    }
    out.t.push_back(s.time);
    out.direct.push_back(V);
    out.integrated.push_back(v0 + integral);
    const double r = V - v0 - integral;
    out.residual.push_back(r);
    out.max_abs_residual = std::max(out.max_abs_residual, std::abs(r));
    prev_drift = drift;
    prev_t = s.time;
  }
  return out;
}

// --- localization and modulation ---------------------------------------------------------

double localized_mass(const ComplexField& v, const Vec2& center, double R) {
  if (!(R > 0.0)) throw PreconditionError("radius must be positive");
  const double R2 = R * R;
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (dist2(v.grid.point(i), center) <= R2) sum += std::norm(v[i]);
  return sum * v.grid.cell_volume();
}

namespace {

double parabola_offset(double fm, double f0, double fp) {
  const double den = fm - 2.0 * f0 + fp;
  if (!(den < 0.0)) return 0.0;
  return std::clamp(0.5 * (fm - fp) / den, -0.5, 0.5);
}

}  // namespace

Vec2 peak_center(const ComplexField& v) {
  const GridSpec& g = v.grid;
  std::size_t best = 0;
  double fmax = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = std::norm(v[i]);
    if (f > fmax) {
      fmax = f;
      best = i;
    }
  }
  const std::size_t N = g.points;
  const double dx = g.spacing();
  Vec2 c = g.point(best);
  if (g.dim == 1) {
    const double fm = std::norm(v[(best + N - 1) % N]);
    const double fp = std::norm(v[(best + 1) % N]);
    c[0] += parabola_offset(fm, fmax, fp) * dx;
  } else {
    const std::size_t i = best / N, j = best % N;
    const double fxm = std::norm(v[((i + N - 1) % N) * N + j]);
    const double fxp = std::norm(v[((i + 1) % N) * N + j]);
    const double fym = std::norm(v[i * N + (j + N - 1) % N]);
    const double fyp = std::norm(v[i * N + (j + 1) % N]);
    c[0] += parabola_offset(fxm, fmax, fxp) * dx;
    c[1] += parabola_offset(fym, fmax, fyp) * dx;
  }
  return c;
}

bool has_secondary_peak(const ComplexField& v) {
  const GridSpec& g = v.grid;
  const std::size_t N = g.points;
  std::vector<double> peaks;
  auto f = [&](std::size_t i, std::size_t j) { return std::abs(v[g.dim == 1 ? i : i * N + j]); };
  if (g.dim == 1) {
    for (std::size_t i = 0; i < N; ++i) {
      const double c = f(i, 0);
      if (c > f((i + N - 1) % N, 0) && c >= f((i + 1) % N, 0)) peaks.push_back(c);
    }
  } else {
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        const double c = f(i, j);
        bool is_max = c > 0.0;
        for (int di = -1; di <= 1 && is_max; ++di)
          for (int dj = -1; dj <= 1 && is_max; ++dj) {
            if (di == 0 && dj == 0) continue;
            const double n = f((i + N + di) % N, (j + N + dj) % N);
            // strict on earlier neighbours so that plateaus count once
            if ((di < 0 || (di == 0 && dj < 0)) ? n >= c : n > c) is_max = false;
          }
        if (is_max) peaks.push_back(c);
      }
  }
  if (peaks.size() < 2) return false;
  std::partial_sort(peaks.begin(), peaks.begin() + 2, peaks.end(), std::greater<>());
  return peaks[1] > 0.5 * peaks[0];
}

namespace {

/// Value, gradient and Hessian of |v|^2 at y from the trigonometric interpolant
/// (Nyquist mode dropped).
struct LocalQuadratic {
  double f = 0.0;
  Vec2 g{0.0, 0.0};
  std::array<double, 3> h{0.0, 0.0, 0.0};  // xx, xy, yy
};

LocalQuadratic evaluate_modulus_sq(const GridSpec& grid, const std::vector<cplx>& spec, const Vec2& y) {
  const std::size_t N = grid.points;
  const auto k = grid.wavenumbers();
  const double x0 = -0.5 * grid.extent;
  const double norm = 1.0 / static_cast<double>(grid.size());
  auto phases = [&](double coord) {
    std::vector<cplx> e(N);
    for (std::size_t i = 0; i < N; ++i)
      e[i] = i == N / 2 ? cplx(0.0) : std::polar(1.0, k[i] * (coord - x0));
    return e;
  };
  const cplx I(0.0, 1.0);
  cplx v = 0.0, vx = 0.0, vy = 0.0, vxx = 0.0, vxy = 0.0, vyy = 0.0;
  const auto ex = phases(y[0]);
  if (grid.dim == 1) {
    for (std::size_t a = 0; a < N; ++a) {
      const cplx t = spec[a] * ex[a];
      v += t;
      vx += I * k[a] * t;
      vxx -= k[a] * k[a] * t;
    }
  } else {
    const auto ey = phases(y[1]);
    for (std::size_t a = 0; a < N; ++a) {
      cplx row = 0.0, row_y = 0.0, row_yy = 0.0;
      for (std::size_t b = 0; b < N; ++b) {
        const cplx t = spec[a * N + b] * ey[b];
        row += t;
        row_y += I * k[b] * t;
        row_yy -= k[b] * k[b] * t;
      }
      v += ex[a] * row;
      vx += I * k[a] * ex[a] * row;
      vxx -= k[a] * k[a] * ex[a] * row;
      vy += ex[a] * row_y;
      vxy += I * k[a] * ex[a] * row_y;
      vyy += ex[a] * row_yy;
    }
  }
  v *= norm; vx *= norm; vy *= norm; vxx *= norm; vxy *= norm; vyy *= norm;
  LocalQuadratic q;
  q.f = std::norm(v);
  q.g = {2.0 * (std::conj(v) * vx).real(), 2.0 * (std::conj(v) * vy).real()};
  q.h = {2.0 * (std::norm(vx) + (std::conj(v) * vxx).real()),
         2.0 * ((std::conj(vx) * vy).real() + (std::conj(v) * vxy).real()),
         2.0 * (std::norm(vy) + (std::conj(v) * vyy).real())};
  return q;
}

Vec2 refine_peak(const ComplexField& v, Vec2 y) {
  std::vector<cplx> spec(v.size());
  fft_forward(v.grid, v.values, spec);
  const double dx = v.grid.spacing();
  const Vec2 start = y;
  for (int it = 0; it < 30; ++it) {
    const LocalQuadratic q = evaluate_modulus_sq(v.grid, spec, y);
    Vec2 step{0.0, 0.0};
    if (v.grid.dim == 1) {
      if (!(q.h[0] < 0.0)) break;
      step[0] = -q.g[0] / q.h[0];
    } else {
      const double det = q.h[0] * q.h[2] - q.h[1] * q.h[1];
      if (!(q.h[0] < 0.0 && det > 0.0)) break;
      step[0] = -(q.h[2] * q.g[0] - q.h[1] * q.g[1]) / det;
      step[1] = -(q.h[0] * q.g[1] - q.h[1] * q.g[0]) / det;
    }
    y[0] += step[0];
    y[1] += step[1];
    if (std::abs(y[0] - start[0]) > dx || std::abs(y[1] - start[1]) > dx) return start;
    if (std::hypot(step[0], step[1]) < 1e-15 * v.grid.extent) break;
  }
  return y;
}

ComplexField sample_profile(const GridSpec& grid, const RadialProfile& q, const Vec2& center,
                            double scale) {
  return sample_field(grid, [&](const Vec2& x) { return q(std::sqrt(dist2(x, center)) / scale); });
}

}  // namespace

ModulationFit modulation_fit(const ComplexField& v, const RadialProfile& q) {
  const GridSpec& grid = v.grid;
  if (q.dim() != grid.dim) throw PreconditionError("profile dimension does not match the grid");
  const double g2 = gradient_norm_sq(v);
  if (!(g2 > 0.0) || !(l2_norm_sq(v) > 0.0)) throw PreconditionError("cannot fit a zero field");
  ModulationFit fit;
  fit.lambda = std::sqrt(ground_state_gradient_sq(grid.dim, q.exponent()) / g2);
  fit.center = refine_peak(v, peak_center(v));
  fit.secondary_peak = has_secondary_peak(v);

  ComplexField rescaled = sample_affine(v, fit.lambda, fit.center);
  rescaled *= cplx(std::pow(fit.lambda, 0.5 * grid.dim));
  const ComplexField Q = sample_profile(grid, q, {0.0, 0.0}, 1.0);
  fit.gamma = std::arg(l2_inner(Q, rescaled));
  rescaled *= std::polar(1.0, -fit.gamma);
  const ComplexField eps = rescaled - Q;
  const double l2 = l2_norm_sq(eps);
  fit.residual_l2 = std::sqrt(l2);
  fit.residual_h1 = std::sqrt(l2 + gradient_norm_sq(eps));
  return fit;
}

ComplexField reconstruct(const ModulationFit& fit, const GridSpec& grid, const RadialProfile& q) {
  ComplexField out = sample_profile(grid, q, fit.center, fit.lambda);
  out *= std::pow(fit.lambda, -0.5 * grid.dim) * std::polar(1.0, fit.gamma);
  return out;
}

// --- blow-up rate -----------------------------------------------------------------------

namespace {

struct LineFit {
  double alpha = 0.0;
  double intercept = 0.0;
  double ssr = std::numeric_limits<double>::infinity();
};

// log g = intercept - alpha log(T - t) [+ 1/2 log ln|ln(T - t)|]
LineFit fit_line(std::span<const double> t, std::span<const double> logg, double T, bool loglog) {
  const std::size_t n = t.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = T - t[i];
    x[i] = std::log(tau);
    y[i] = logg[i];
    if (loglog) {
      const double ll = std::log(std::abs(x[i]));
      if (!(ll > 0.0)) return {};
      y[i] -= 0.5 * std::log(ll);
    }
  }
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) return {};
  LineFit f;
  const double slope = sxy / sxx;
  f.alpha = -slope;
  f.intercept = ym - slope * xm;
  f.ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + slope * x[i]);
    f.ssr += r * r;
  }
  return f;
}

struct ProfiledFit {
  double T = 0.0;
  LineFit line;
};

// Minimizes the line-fit residual over T = t_last + e^s, s in [s_lo, s_hi].
ProfiledFit profile_T(std::span<const double> t, std::span<const double> logg, double s_lo,
                      double s_hi, bool loglog) {
  ProfiledFit best;
  if (!(s_hi > s_lo)) return best;
  const double t_last = t.back();
  auto ssr = [&](double s) { return fit_line(t, logg, t_last + std::exp(s), loglog).ssr; };
  constexpr int scan = 400;
  double best_s = s_lo, best_v = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i <= scan; ++i) {
    const double s = s_lo + (s_hi - s_lo) * i / scan;
    const double v = ssr(s);
    if (v < best_v) {
      best_v = v;
      best_s = s;
      best_i = i;
    }
  }
  if (!std::isfinite(best_v)) return best;
  const double h = (s_hi - s_lo) / scan;
  const double lo = best_i > 0 ? best_s - h : best_s;
  const double hi = best_i < scan ? best_s + h : best_s;
  std::uintmax_t iters = 200;
  const auto [s_opt, v_opt] = boost::math::tools::brent_find_minima(ssr, lo, hi, 52, iters);
  const double s_final = v_opt <= best_v ? s_opt : best_s;
  best.T = t_last + std::exp(s_final);
  best.line = fit_line(t, logg, best.T, loglog);
  return best;
}

}  // namespace

RateFit blowup_rate_fit(std::span<const double> t, std::span<const double> g) {
  if (t.size() != g.size()) throw PreconditionError("time and gradient series differ in length");
  if (t.size() < 20) throw PreconditionError("rate fit needs at least 20 samples");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw PreconditionError("sample times must increase");
  double gmin = g[0], gmax = g[0];
  for (double x : g) {
    if (!(x > 0.0)) throw PreconditionError("gradient norms must be positive");
    gmin = std::min(gmin, x);
    gmax = std::max(gmax, x);
  }
  if (gmax < 10.0 * gmin) throw PreconditionError("insufficient dynamic range for a rate fit");

  std::vector<double> logg(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) logg[i] = std::log(g[i]);
  const double span = t.back() - t.front();
  const double s_lo = std::log(1e-9 * span);
  const double s_hi = std::log(10.0 * span);

  const ProfiledFit power = profile_T(t, logg, s_lo, s_hi, false);
  RateFit r;
  r.T_est = power.T;
  r.alpha = power.line.alpha;
  r.log_C = power.line.intercept;
  r.ssr_power = power.line.ssr;

  // ln|ln(T - t)| > 0 needs T - t < 1/e over the whole window.
  const double room = 1.0 / std::numbers::e - span;
  const ProfiledFit loglog =
      room > 0.0 ? profile_T(t, logg, s_lo, std::min(s_hi, std::log(room) - 1e-9), true) : ProfiledFit{};
  r.ssr_loglog = loglog.line.ssr;
  if (std::isfinite(r.ssr_loglog))
    r.loglog_score = (r.ssr_power - r.ssr_loglog) / std::max(r.ssr_power, 1e-300);
  else
    r.ssr_loglog = std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::optional<RateFit> trajectory_rate_fit(const Trajectory& traj) {

  const auto& rows = traj.diagnostics;
  const double g0 = rows.front().grad_norm;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].grad_norm >= 2.0 * g0) idx.push_back(i);
  if (idx.size() < 20) return std::nullopt;
  const std::size_t stride = (idx.size() + 1999) / 2000;
  std::vector<double> t, g;
  for (std::size_t k = 0; k < idx.size(); k += stride) {
    t.push_back(rows[idx[k]].t);
    g.push_back(rows[idx[k]].grad_norm);
  }
  if (t.back() != rows[idx.back()].t) {
    t.push_back(rows[idx.back()].t);
    g.push_back(rows[idx.back()].grad_norm);
  }
  try {
    return blowup_rate_fit(t, g);
  } catch (const PreconditionError&) {
    return std::nullopt;
  }
}

// --- profile residuals ----------------------------------------------------------------------

namespace {

ProfileResidual residual_report(const ComplexField& diff, const std::vector<Vec2>& centers) {
  ProfileResidual out;
  const NormSuite n = norm_suite(diff);
  out.global = {n.l2, n.h1, n.sigma};
  double radius = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < centers.size(); ++a)
    for (std::size_t b = a + 1; b < centers.size(); ++b)
      radius = std::min(radius, 0.5 * std::sqrt(dist2(centers[a], centers[b])));
  const auto grad = gradient(diff);
  const double dV = diff.grid.cell_volume();
  for (const auto& c : centers) {
    double l2 = 0.0, g2 = 0.0, w2 = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
      const double r2 = dist2(diff.grid.point(i), c);
      if (r2 > radius * radius) continue;
      const double m = std::norm(diff[i]);
      l2 += m;
      w2 += r2 * m;
      for (const auto& ga : grad) g2 += std::norm(ga[i]);
    }
    l2 *= dV;
    g2 *= dV;
    w2 *= dV;
    out.per_profile.push_back({std::sqrt(l2), std::sqrt(l2 + g2), std::sqrt(l2 + g2 + w2)});
  }
  return out;
}

}  // namespace

ProfileResidual profile_residuals(const ComplexField& v, double t, const BlowupParams& params,
                                  const RadialProfile& q, const std::optional<ComplexField>& z) {
  ComplexField diff = v - pseudo_conformal_blowup(params, t, v.grid, q);
  if (z) diff -= *z;
  std::vector<Vec2> centers;
  for (const auto& b : params.bubbles) centers.push_back(b.x);
  return residual_report(diff, centers);
}

ProfileResidual profile_residuals(const ComplexField& v, double t, const SolitonParams& params,
                                  const RadialProfile& q, const std::optional<ComplexField>& z) {
  ComplexField diff = v - solitary_wave(params, t, v.grid, q);
  if (z) diff -= *z;
  std::vector<Vec2> centers;
  for (const auto& s : params.solitons)
    centers.push_back({s.x0[0] + s.c[0] * t, s.x0[1] + s.c[1] * t});
  return residual_report(diff, centers);
}

}  // namespace nlslab
