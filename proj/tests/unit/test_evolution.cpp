#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nlslab/diagnostics.hpp"
#include "nlslab/error.hpp"
#include "nlslab/evolution.hpp"
#include "nlslab/exact_solutions.hpp"
#include "nlslab/ground_state.hpp"
#include "test_support.hpp"

using namespace nlslab;
using nlslab::testing::l2_distance;
using nlslab::testing::max_abs_diff;

namespace {

SolitonParams resting_soliton(double p) {
  SolitonParams s;
  s.p = p;
  s.solitons.push_back({{0.0, 0.0}, {0.0, 0.0}, 1.0, 0.0});
  return s;
}

EvolveConfig soliton_run(double dt0, double t1) {
  EvolveConfig c;
  c.grid = make_grid(1, 40.0, 512);
  c.p = 3.0;
  const RadialProfile q = RadialProfile::closed_form_1d(3.0);
  SolitonParams s;
  s.p = 3.0;
  s.solitons.push_back({{0.5, 0.0}, {-2.0, 0.0}, 1.0, 0.0});
  c.initial = solitary_wave(s, 0.0, c.grid, q);
  c.t1 = t1;
  c.dt0 = dt0;
  c.adaptive = false;
  c.cadence = 1000000;
  return c;
}

}  // namespace

TEST_SUITE("evolution") {

TEST_CASE("plane wave is propagated exactly") {
  const GridSpec g = make_grid(1, 2.0 * std::numbers::pi, 64);
  const double A = 0.8, k = 3.0, dt = 0.01;
  for (double p : {3.0, 5.0}) {
    const ComplexField u = sample_field(g, [&](const Vec2& x) { return std::polar(A, k * x[0]); });
    const ComplexField expect = sample_field(g, [&](const Vec2& x) {
      return std::polar(A, k * x[0] + (std::pow(A, p - 1.0) - k * k) * dt);
    });
    const ComplexField v = step_strang(u, dt, p);
    CHECK(max_abs_diff(v, expect) < 1e-13);
  }
}

TEST_CASE("one step preserves the mass to roundoff") {
  const GridSpec g = make_grid(1, 40.0, 1024);
  const ComplexField u = sample_field(g, [](const Vec2& x) { return std::polar(1.2 * std::exp(-x[0] * x[0]), 0.5 * x[0]); });
  const ComplexField v = step_strang(u, 1e-3, 5.0);
  CHECK(std::abs(l2_norm_sq(v) / l2_norm_sq(u) - 1.0) < 1e-14);
}

TEST_CASE("soliton local error is third order") {
  const GridSpec g = make_grid(1, 40.0, 1024);
  const RadialProfile q = RadialProfile::closed_form_1d(5.0);
  const SolitonParams s = resting_soliton(5.0);
  const ComplexField w0 = solitary_wave(s, 0.0, g, q);
  auto local_error = [&](double dt) { return l2_distance(step_strang(w0, dt, 5.0), solitary_wave(s, dt, g, q)); };
  const double ratio = local_error(0.02) / local_error(0.01);
  CHECK(ratio == doctest::Approx(8.0).epsilon(0.1));
}

TEST_CASE("gNLS step with zero or constant-profile coefficients equals Strang bitwise") {
  const GridSpec g = make_grid(1, 40.0, 256);
  const ComplexField u = sample_field(g, [](const Vec2& x) { return std::polar(1.0 / std::cosh(x[0]), 0.3 * x[0]); });
  LowerOrderCoefficients zero;
  zero.a1 = {ComplexField(g)};
  zero.a0 = ComplexField(g);
  zero.mu = RealField(g);
  CHECK(step_gnls(u, 1e-3, 5.0, zero).values == step_strang(u, 1e-3, 5.0).values);

  const NoiseProfileSet s = make_profiles(ProfileKind::constant, 0.5, {}, g, 2);
  const std::vector<double> h{0.7, -1.1};
  CHECK(step_gnls(u, 1e-3, 5.0, lower_order_coefficients(s, h)).values == step_strang(u, 1e-3, 5.0).values);
}

TEST_CASE("smooth drive: global self-convergence of order >= 2") {
  EvolveConfig base = soliton_run(0.02, 1.0);
  NoiseSpec n{make_profiles(ProfileKind::schwartz, 0.3, {}, base.grid, 1, 2.0), 0, TemporalDriver::sinusoid};
  base.noise = n;
  auto final_field = [&](int level) {
    EvolveConfig c = base;
    c.dt_level = level;
    return integrate(c).snapshots.back().field;
  };
  const ComplexField u0 = final_field(0), u1 = final_field(1), u2 = final_field(2);
  const double order = std::log2(l2_distance(u0, u1) / l2_distance(u1, u2));
  CAPTURE(order);
  CHECK(order >= 2.0 - 0.05);
}

TEST_CASE("Hamiltonian drift shrinks 4x when dt halves") {
  auto drift = [](double dt0) {
    EvolveConfig c;
    c.grid = make_grid(1, 40.0, 1024);
    c.p = 5.0;
    c.initial = nlslab::testing::gaussian(c.grid, 1.0, 1.0);
    c.t1 = 1.0;
    c.dt0 = dt0;
    c.adaptive = false;
    c.cadence = 1000000;
    const Trajectory t = integrate(c);
    return std::abs(t.diagnostics.back().hamiltonian - t.diagnostics.front().hamiltonian);
  };
  const double ratio = drift(0.01) / drift(0.005);
  CAPTURE(ratio);
  CHECK(ratio >= 4.0 * 0.7);
  CHECK(ratio <= 4.0 * 1.3);
}

TEST_CASE("mass drift of long deterministic and noisy runs") {
  EvolveConfig c = soliton_run(1e-3, 5.0);
  const Trajectory t = integrate(c);
  CHECK(t.steps() == 5000);
  const double m0 = t.diagnostics.front().mass;
  double worst = 0.0;
  for (const auto& r : t.diagnostics) worst = std::max(worst, std::abs(r.mass / m0 - 1.0));
  CHECK(worst < 1e-12);

  EvolveConfig noisy = soliton_run(1e-3, 1.0);
  noisy.noise = NoiseSpec{make_profiles(ProfileKind::schwartz, 0.3, {}, noisy.grid, 2, 2.0), 4, TemporalDriver::brownian};
  const Trajectory tn = integrate(noisy);
  double worst_n = 0.0;
  for (const auto& r : tn.diagnostics) worst_n = std::max(worst_n, std::abs(r.mass / tn.diagnostics.front().mass - 1.0));
  CHECK(worst_n < 1e-10);
}

TEST_CASE("pseudo-conformal data stop before T with T estimated") {
  EvolveConfig c;
  c.grid = make_grid(1, 40.0, 4096);
  c.p = 5.0;
  const RadialProfile q = RadialProfile::closed_form_1d(5.0);
  BlowupParams b;
  b.T = 1.0;
  b.bubbles.push_back({{0.0, 0.0}, 1.0, 0.0});
  c.initial = pseudo_conformal_blowup(b, 0.0, c.grid, q);
  c.t1 = 1.0;
  c.dt0 = 1e-3;
  c.width_factor = 8.0;
  c.g_max = 1e3;
  c.cadence = 1000;
  const Trajectory t = integrate(c);
  CHECK(t.stop_reason != StopReason::reached_t1);
  CHECK(t.final_time() < 1.0);
  CHECK(std::abs(t.T_est - 1.0) < 0.02);
  CHECK(t.step_levels.front() == 0);
  CHECK(t.step_levels.back() > 0);
}

TEST_CASE("stop reasons") {
  EvolveConfig c = soliton_run(1e-3, 1.0);
  c.max_steps = 10;
  CHECK(integrate(c).stop_reason == StopReason::step_limit);
  CHECK(integrate(c).steps() == 10);

  EvolveConfig g;
  g.grid = make_grid(1, 40.0, 2048);
  g.p = 5.0;
  BlowupParams b;
  b.T = 1.0;
  b.bubbles.push_back({{0.0, 0.0}, 1.0, 0.0});
  g.initial = pseudo_conformal_blowup(b, 0.0, g.grid, RadialProfile::closed_form_1d(5.0));
  g.g_max = 3.0 * std::sqrt(gradient_norm_sq(g.initial));
  g.dt0 = 1e-3;
  const Trajectory tg = integrate(g);
  CHECK(tg.stop_reason == StopReason::blowup_threshold);
  CHECK(tg.diagnostics.back().grad_norm >= g.g_max);
  CHECK(tg.diagnostics[tg.diagnostics.size() - 2].grad_norm < g.g_max);
  CHECK(tg.snapshots.back().time == tg.final_time());
}

TEST_CASE("same config twice: bitwise identical trajectories") {
  EvolveConfig c = soliton_run(1e-3, 0.2);
  c.noise = NoiseSpec{make_profiles(ProfileKind::schwartz, 0.5, {}, c.grid, 2, 2.0), 99, TemporalDriver::brownian};
  c.cadence = 10;
  const Trajectory a = integrate(c), b = integrate(c);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) REQUIRE(a.snapshots[i].field.values == b.snapshots[i].field.values);
  for (std::size_t i = 0; i < a.drive.size(); ++i) REQUIRE(a.drive[i] == b.drive[i]);
}

TEST_CASE("drive values follow the seeded Brownian path") {
  EvolveConfig c = soliton_run(0.01, 0.1);
  c.noise = NoiseSpec{make_profiles(ProfileKind::schwartz, 0.5, {}, c.grid, 1, 2.0), 3, TemporalDriver::brownian};
  c.dt_level = 1;
  const Trajectory t = integrate(c);
  std::vector<double> base(11);
  for (int i = 0; i <= 10; ++i) base[i] = 0.01 * i;
  base.back() = 0.1;
  const BrownianPath path = BrownianPath::sample(3, base, 1).refined(1);
  REQUIRE(t.drive.size() == path.times().size());
  for (std::size_t i = 0; i < t.drive.size(); ++i) REQUIRE(t.drive[i][0] == path.value(0, i));
}

TEST_CASE("invalid configurations") {
  EvolveConfig c = soliton_run(1e-3, 1.0);
  c.checkpoints = {0.00037};
  CHECK_THROWS_AS(integrate(c), PreconditionError);
  EvolveConfig d = soliton_run(-1.0, 1.0);
  CHECK_THROWS_AS(integrate(d), PreconditionError);
  EvolveConfig e = soliton_run(1e-3, 1.0);
  e.max_level = 30;
  CHECK_THROWS_AS(integrate(e), PreconditionError);
}

TEST_CASE("checkpoints are recorded as snapshots") {
  EvolveConfig c = soliton_run(1e-2, 1.0);
  c.checkpoints = {0.25, 0.5};
  const Trajectory t = integrate(c);
  int found = 0;
  for (const auto& s : t.snapshots)
    if (std::abs(s.time - 0.25) < 1e-12 || std::abs(s.time - 0.5) < 1e-12) ++found;
  CHECK(found == 2);
}

TEST_CASE("blow-up time estimate is exact for a 1/(T - t) law") {
  std::vector<DiagnosticRow> rows;
  for (int i = 0; i <= 900; ++i) {
    DiagnosticRow r;
    r.t = 0.001 * i;
    r.grad_norm = 2.0 / (1.3 - r.t);
    rows.push_back(r);
  }
  CHECK(estimate_blowup_time(rows) == doctest::Approx(1.3).epsilon(1e-10));
  rows.resize(3);
  CHECK(std::isnan(estimate_blowup_time(rows)));
}

TEST_CASE("backward solve") {
  const GridSpec g = make_grid(1, 40.0, 512);
  const double qh1 = std::sqrt(ground_state_mass(1, 5.0) + ground_state_gradient_sq(1, 5.0));
  ComplexField z = nlslab::testing::gaussian(g, 1.0, 1.0, {3.0, 0.0});
  z *= cplx(0.05 * qh1 / norm_suite(z).h1);

  const ComplexField z0 = backward_solve(z, 1.0, 0.0, 5.0, 1e-3);
  // forward again from t0 to T
  ComplexField u = z0;
  for (int i = 0; i < 1000; ++i) u = step_strang(u, 1e-3, 5.0);
  CHECK(max_abs_diff(u, z) < 1e-8);
  CHECK(norm_suite(z0).h1 <= 2.0 * norm_suite(z).h1);

  const ComplexField zero = backward_solve(ComplexField(g), 1.0, 0.0, 5.0, 1e-3);
  CHECK(l2_norm_sq(zero) == 0.0);

  CHECK_THROWS_AS(backward_solve(cplx(10.0) * z, 1.0, 0.0, 5.0, 1e-3), PreconditionError);
}

}  // TEST_SUITE
