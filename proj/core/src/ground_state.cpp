#include "nlslab/ground_state.hpp"

#include <algorithm>
#include <array>
#include <boost/math/interpolators/cardinal_quintic_b_spline.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "nlslab/error.hpp"
#include "nlslab/fft.hpp"

namespace nlslab {
namespace {

// sech(z)^alpha without overflow.
double sech_pow(double z, double alpha) {
  const double e = std::exp(-2.0 * std::abs(z));
  return std::pow(2.0 * std::exp(-std::abs(z)) / (1.0 + e), alpha);
}

double closed_form_value(double p, double x) {
  const double amp = std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0));
  return amp * sech_pow(0.5 * (p - 1.0) * x, 2.0 / (p - 1.0));
}

void require_exponent(int dim, double p) {
  if (dim == 1) {
    if (!(p > 1.0 && p <= 5.0)) throw PreconditionError("1D ground state needs p in (1, 5]");
  } else if (dim == 2) {
    if (p != 3.0) throw PreconditionError("2D ground states are supported for p = 3 only");
  } else {
    throw PreconditionError("ground states need d in {1, 2}");
  }
}

// --- shooting ---------------------------------------------------------------

using State = std::array<double, 3>;  // Q, Q', integral of Q^2 r^{d-1}

struct RadialOde {
  int dim;
  double p;
  void operator()(const State& s, State& ds, double r) const {
    const double q = s[0];
    ds[0] = s[1];
    ds[1] = -(dim - 1) / r * s[1] + q - std::pow(std::abs(q), p - 1.0) * q;
    ds[2] = q * q * std::pow(r, dim - 1);
  }
};

constexpr double kShootStep = 1e-3;
constexpr double kShootStart = 1e-4;
constexpr double kShootMax = 40.0;

enum class Shot { undershoot, overshoot };

// Series start: Q ~ a + c r^2 / (2d), c = a - a^p.
State initial_state(int dim, double p, double a) {
  const double c = a - std::pow(a, p);
  const double r = kShootStart;
  return {a + c * r * r / (2.0 * dim), c * r / dim, a * a * std::pow(r, dim) / dim};
}

template <class Observer>
Shot shoot(int dim, double p, double a, Observer&& observe) {
  boost::numeric::odeint::runge_kutta4<State> stepper;
  RadialOde ode{dim, p};
  State s = initial_state(dim, p, a);
  // First step shortened so the nodes sit at n * kShootStep, where the table samples them.
  stepper.do_step(ode, s, kShootStart, kShootStep - kShootStart);
  for (long n = 1;; ++n) {
    const double r = static_cast<double>(n) * kShootStep;
    if (n > 1) stepper.do_step(ode, s, r - kShootStep, kShootStep);
    if (r >= kShootMax) break;
    if (s[0] < 0.0) return Shot::overshoot;
    if (s[1] > 0.0) return Shot::undershoot;
    if (!observe(r, s)) break;
  }
  return Shot::undershoot;
}

}  // namespace

// --- profiles -----------------------------------------------------------------

RadialProfile RadialProfile::closed_form_1d(double p) {
  require_exponent(1, p);
  RadialProfile prof;
  prof.dim_ = 1;
  prof.p_ = p;
  prof.closed_ = true;
  return prof;
}

RadialProfile RadialProfile::from_table(const RadialTable& table) {
  RadialProfile prof;
  prof.dim_ = table.dim;
  prof.p_ = table.p;
  prof.closed_ = false;
  const std::size_t n_cut = static_cast<std::size_t>(std::floor(table.r_cut / table.dr));
  // Quintic spline through the even extension Q(-r) = Q(r): odd derivatives vanish at
  // r = 0, so Q(|x|) has no kink at the origin and Fourier resampling stays clean.
  std::vector<double> q;
  q.reserve(2 * n_cut + 1);
  for (std::size_t j = n_cut; j > 0; --j) q.push_back(table.q[j]);
  q.insert(q.end(), table.q.begin(), table.q.begin() + static_cast<long>(n_cut + 1));
  auto spline = std::make_shared<boost::math::interpolators::cardinal_quintic_b_spline<double>>(
      q, -static_cast<double>(n_cut) * table.dr, table.dr);
  prof.spline_ = [spline](double r) { return (*spline)(r); };
  prof.r_cut_ = static_cast<double>(n_cut) * table.dr;
  prof.q_cut_ = table.q[n_cut];
  return prof;
}

namespace {

const RadialTable& cached_shooting_table(int dim, double p) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, RadialTable> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({dim, p});
  if (it == cache.end()) it = cache.emplace(std::pair{dim, p}, radial_shooting_oracle(dim, p)).first;
  return it->second;
}

}  // namespace

RadialProfile RadialProfile::for_dimension(int dim, double p) {
  if (dim == 1) return closed_form_1d(p);
  return from_table(cached_shooting_table(dim, p));
}

double RadialProfile::operator()(double r) const {
  r = std::abs(r);
  if (closed_) return closed_form_value(p_, r);
  constexpr double kBlend = 2.0;
  if (r <= r_cut_ - kBlend) return spline_(r);
  // Linearized tail: e^{-r} in 1D, K_0(r) in 2D, joined over [r_cut - kBlend, r_cut]
  // with a C^3 smoothstep so the profile has no kink there.
  const double tail = dim_ == 1
      ? q_cut_ * std::exp(-(r - r_cut_))
      : q_cut_ * boost::math::cyl_bessel_k(0, r) / boost::math::cyl_bessel_k(0, r_cut_);
  if (r >= r_cut_) return tail;
  const double u = (r - (r_cut_ - kBlend)) / kBlend;
  const double w = u * u * u * u * (35.0 - 84.0 * u + 70.0 * u * u - 20.0 * u * u * u);
  return (1.0 - w) * spline_(r) + w * tail;
}

// --- ground states ------------------------------------------------------------

GroundState q_closed_form_1d(double p, const GridSpec& grid) {
  if (grid.dim != 1) throw PreconditionError("closed form ground state is one-dimensional");
  require_exponent(1, p);
  GroundState gs;
  gs.dim = 1;
  gs.p = p;
  gs.field = sample_field(grid, [p](const Vec2& x) { return closed_form_value(p, x[0]); });
  gs.residual = elliptic_residual(gs.field, p);
  gs.mass = l2_norm_sq(gs.field);
  return gs;
}

double elliptic_residual(const ComplexField& f, double p) {
  ComplexField r = laplacian(f);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const cplx v = f[i];
    r[i] += -v + std::pow(std::abs(v), p - 1.0) * v;
  }
  return std::sqrt(l2_norm_sq(r));
}

GroundState solve_ground_state(const GridSpec& grid, double p, double tol,
                               const GroundStateOptions& options) {
  require_exponent(grid.dim, p);
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  if (grid.spacing() > 0.2 + 1e-12) throw PreconditionError("grid too coarse: need dx <= 0.2");
  const double tau = options.tau;

  ComplexField u = options.initial ? *options.initial
                                   : sample_field(grid, [](const Vec2& x) {
                                       return 1.5 * std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
                                     });
  require_same_grid(u.grid, grid);

  // 1 + |k|^2 on the spectral grid.
  std::vector<double> symbol(grid.size());
  {
    const auto k = grid.wavenumbers();
    const std::size_t n = grid.points;
    for (std::size_t m = 0; m < grid.size(); ++m) {
      const double kx = grid.dim == 1 ? k[m] : k[m / n];
      const double ky = grid.dim == 1 ? 0.0 : k[m % n];
      symbol[m] = 1.0 + kx * kx + ky * ky;
    }
  }

  ComplexField uhat(grid), nhat(grid), nl(grid);
  auto nehari_rescale = [&](ComplexField& v) {
    fft_forward(grid, v.values, uhat.values);
    double quad = 0.0;
    for (std::size_t m = 0; m < grid.size(); ++m) quad += symbol[m] * std::norm(uhat[m]);
    quad *= grid.cell_volume() / static_cast<double>(grid.size());
    const double pot = lp_integral(v, p + 1.0);
    v *= std::pow(quad / pot, 1.0 / (p - 1.0));
  };

  GroundState gs;
  gs.dim = grid.dim;
  gs.p = p;
  double res = elliptic_residual(u, p);
  int it = 0;
  while (res >= tol) {
    if (it >= options.max_iterations)
      throw ConvergenceError("ground state flow did not converge (residual " +
                             format_double(res) + ")");
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double v = u[i].real();
      nl[i] = std::pow(std::abs(v), p - 1.0) * v;
    }
    fft_forward(grid, u.values, uhat.values);
    fft_forward(grid, nl.values, nhat.values);
    for (std::size_t m = 0; m < grid.size(); ++m)
      uhat[m] = (uhat[m] + tau * nhat[m]) / (1.0 + tau * symbol[m]);
    fft_backward(grid, uhat.values, u.values);
    double peak = 0.0, lowest = 0.0;
    for (auto& v : u.values) {
      v = cplx(v.real(), 0.0);
      peak = std::max(peak, v.real());
      lowest = std::min(lowest, v.real());
    }
    if (lowest < -1e-10 * peak) throw NumericalError("ground state flow produced negative values");
    nehari_rescale(u);
    res = elliptic_residual(u, p);
    ++it;
  }
  gs.field = std::move(u);
  gs.residual = res;
  gs.mass = l2_norm_sq(gs.field);
  gs.iterations = it;
  return gs;
}

RadialTable radial_shooting_oracle(int dim, double p, double tol) {
  if (dim != 1 && dim != 2) throw PreconditionError("shooting needs d in {1, 2}");
  if (!(p > 1.0)) throw PreconditionError("shooting needs p > 1");
  auto no_observer = [](double, const State&) { return true; };

  double lo = 1.0 + 1e-9, hi = 8.0;
  if (shoot(dim, p, lo, no_observer) != Shot::undershoot ||
      shoot(dim, p, hi, no_observer) != Shot::overshoot)
    throw ConvergenceError("shooting bracket does not straddle the ground state");
  for (int i = 0; i < 200 && hi - lo > tol * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (shoot(dim, p, mid, no_observer) == Shot::overshoot ? hi : lo) = mid;
  }
  const double a = 0.5 * (lo + hi);

  RadialTable table;
  table.dim = dim;
  table.p = p;
  table.q0 = a;
  table.dr = kShootStep;  // every shooting node: coarser knots alias into Fourier resampling
  const int stride = static_cast<int>(std::lround(table.dr / kShootStep));
  table.q.push_back(a);
  double mass_core = 0.0;
  int count = 0;
  // Trust the shot while it is still clearly positive and decaying; further out it
  // carries the growing mode left by the bisection tolerance.
  const double floor_value = 1e-5 * a;
  shoot(dim, p, a, [&](double r, const State& s) {
    if (s[0] < floor_value) return false;
    ++count;
    if (count % stride == 0) {
      table.q.push_back(s[0]);
      table.r_cut = r;
      mass_core = s[2];
    }
    return true;
  });
  // Tail beyond r_cut from the linearized decay.
  const double qc = table.q.back();
  const double rc = table.r_cut;
  double tail = 0.0;
  if (dim == 1) {
    tail = 0.5 * qc * qc;
  } else {
    const double k0c = boost::math::cyl_bessel_k(0, rc);
    const double h = 0.01;
    for (double r = rc + 0.5 * h; r < rc + 40.0; r += h) {
      const double q = qc * boost::math::cyl_bessel_k(0, r) / k0c;
      tail += q * q * r * h;
    }
  }
  const double sphere = dim == 1 ? 2.0 : 2.0 * std::numbers::pi;
  table.mass = sphere * (mass_core + tail);
  return table;
}

VariationalIdentities variational_identities(const GroundState& q) {
  const int d = q.field.grid.dim;
  VariationalIdentities out;
  out.gradient_sq = gradient_norm_sq(q.field);
  const double pot = lp_integral(q.field, 2.0 + 4.0 / d);
  out.hamiltonian = 0.5 * out.gradient_sq - d / (2.0 * d + 4.0) * pot;
  out.pohozaev_gap = out.gradient_sq - d / (d + 2.0) * pot;
  out.pohozaev_gap_relative = out.pohozaev_gap / out.gradient_sq;
  out.gn_ratio = gn_ratio(q.field, q.mass);
  return out;
}

double gn_ratio(const ComplexField& v, double q_mass) {
  const int d = v.grid.dim;
  const double mass = l2_norm_sq(v);
  const double num = lp_integral(v, 2.0 + 4.0 / d);
  const double den = (1.0 + 2.0 / d) * std::pow(mass / q_mass, 2.0 / d) * gradient_norm_sq(v);
  return num / den;
}

}  // namespace nlslab

namespace nlslab {

double ground_state_gradient_sq(int dim, double p) {
  // -Delta Q + Q = Q^p paired with Q, and the Pohozaev identity, give
  // ||grad Q||^2 + ||Q||^2 = ||Q||_{p+1}^{p+1} = 2(p+1)/(d(p-1)) ||grad Q||^2.
  const double mass = cached_shooting_table(dim, p).mass;
  return mass / (2.0 * (p + 1.0) / (dim * (p - 1.0)) - 1.0);
}

double ground_state_mass(int dim, double p) { return cached_shooting_table(dim, p).mass; }

}  // namespace nlslab
