#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nlslab/diagnostics.hpp"
#include "nlslab/error.hpp"
#include "nlslab/evolution.hpp"
#include "nlslab/exact_solutions.hpp"
#include "nlslab/ground_state.hpp"
#include "test_support.hpp"

using namespace nlslab;
using nlslab::testing::max_abs_diff;

namespace {

const RadialProfile& q1() {
  static const RadialProfile q = RadialProfile::closed_form_1d(5.0);
  return q;
}

ComplexField bubble(const GridSpec& g, double t, double w = 1.0, Vec2 x = {0.0, 0.0}) {
  BlowupParams b;
  b.T = 1.0;
  b.bubbles.push_back({x, w, 0.0});
  return pseudo_conformal_blowup(b, t, g, q1());
}

std::vector<RealField> unit_gradient(const GridSpec& g) {
  RealField one(g);
  for (auto& v : one.values) v = 1.0;
  return {one};
}

EvolveConfig soliton_config(double t1, std::size_t cadence) {
  EvolveConfig c;
  c.grid = make_grid(1, 60.0, 1024);
  c.p = 5.0;
  SolitonParams s;
  s.p = 5.0;
  s.solitons.push_back({{1.0, 0.0}, {-3.0, 0.0}, 1.0, 0.0});
  c.initial = solitary_wave(s, 0.0, c.grid, q1());
  c.t1 = t1;
  c.dt0 = 1e-3;
  c.adaptive = false;
  c.cadence = cadence;
  return c;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("functionals of exact families") {
  const GridSpec g = make_grid(1, 60.0, 4096);
  const double qm = ground_state_mass(1, 5.0);
  const Functionals fq = functionals(q_closed_form_1d(5.0, g).field);
  CHECK(std::abs(fq.hamiltonian) < 1e-9);
  CHECK(fq.mass == doctest::Approx(qm).epsilon(1e-10));
  CHECK(fq.l2_norm == doctest::Approx(std::sqrt(qm)).epsilon(1e-10));
  for (double t : {0.0, 0.6}) CHECK(functionals(bubble(g, t)).l2_norm == doctest::Approx(std::sqrt(qm)).epsilon(1e-10));

  SolitonParams s;
  s.p = 5.0;
  s.solitons.push_back({{2.0, 0.0}, {0.0, 0.0}, 1.0, 0.0});
  CHECK(functionals(solitary_wave(s, 0.5, g, q1())).hamiltonian == doctest::Approx(4.0 * qm / 8.0).epsilon(1e-8));
}

TEST_CASE("sharp Gagliardo-Nirenberg defect is nonnegative below the threshold mass") {
  const GridSpec g = make_grid(1, 40.0, 1024);
  const double qm = ground_state_mass(1, 5.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 50; ++n) {
    const double w = 0.3 + 2.0 * u(rng), k = 3.0 * (u(rng) - 0.5), c = 4.0 * (u(rng) - 0.5);
    ComplexField f = sample_field(g, [&](const Vec2& x) {
      return std::polar(std::exp(-(x[0] - c) * (x[0] - c) / (w * w)) + 0.5 / std::cosh(x[0] + c), k * x[0] * x[0] / 4.0);
    });
    f *= cplx(std::sqrt(u(rng) * qm / l2_norm_sq(f)));
    const Functionals fn = functionals(f);
    const double g2 = fn.grad_norm * fn.grad_norm;
    REQUIRE(fn.hamiltonian >= 0.5 * (1.0 - std::pow(fn.mass / qm, 2.0)) * g2 - 1e-9 * g2);
  }
}

TEST_CASE("Banica check") {
  const GridSpec g = make_grid(1, 40.0, 1024);
  const ComplexField q = q_closed_form_1d(5.0, g).field;
  const NoiseProfileSet s = make_profiles(ProfileKind::schwartz, 1.0, {}, g, 1, 2.0);
  const BanicaResult real = banica_check(q, s);
  CHECK(real.lhs < 1e-12);
  CHECK(real.satisfied);

  // phi = x: the estimate is an equality for Q e^{i x xi}
  const ComplexField boosted = sample_field(g, [&](const Vec2& x) { return q1()(std::abs(x[0])) * std::polar(1.0, 0.7 * x[0]); });
  const BanicaResult b = banica_check(boosted, unit_gradient(g));
  CHECK(b.satisfied);
  CHECK(b.lhs == doctest::Approx(b.rhs).epsilon(1e-8));

  CHECK_THROWS_AS(banica_check(cplx(2.0) * q, s), PreconditionError);
}

TEST_CASE("Hamiltonian evolution: zero and constant noise reduce to energy drift") {
  EvolveConfig c;
  c.grid = make_grid(1, 40.0, 1024);
  c.p = 5.0;
  c.initial = nlslab::testing::gaussian(c.grid, 0.5, 2.0);
  c.t1 = 1.0;
  c.dt0 = 1e-3;
  c.adaptive = false;
  c.cadence = 50;
  for (auto kind : {ProfileKind::schwartz, ProfileKind::constant}) {
    const double amp = kind == ProfileKind::schwartz ? 0.0 : 0.6;
    const NoiseProfileSet prof = make_profiles(kind, amp, {}, c.grid, 1, 2.0);
    c.noise = NoiseSpec{prof, 5, TemporalDriver::brownian};
    const Trajectory t = integrate(c);
    const HamiltonianEvolution h = hamiltonian_evolution_residual(t, prof);
    for (std::size_t i = 0; i < h.t.size(); ++i) {
      REQUIRE(h.h1[i] == 0.0);
      REQUIRE(h.h2[i] == 0.0);
    }
    CHECK(h.max_abs_residual < 1e-8);
  }
  EvolveConfig det = c;
  det.noise.reset();
  CHECK_THROWS_AS(hamiltonian_evolution_residual(integrate(det), make_profiles(ProfileKind::constant, 1.0, {}, c.grid)), PreconditionError);
}

TEST_CASE("Hamiltonian evolution: residual decreases under path refinement") {
  // On one path the left-point Ito sum carries an O(dt^{1/2}) random error, so the
  // decrease is asserted for the mean over several bridge-refined paths.
  EvolveConfig c;
  c.grid = make_grid(1, 40.0, 512);
  c.p = 5.0;
  c.initial = nlslab::testing::gaussian(c.grid, 0.8, 1.0);
  c.t1 = 0.5;
  c.dt0 = 1e-3;
  c.adaptive = false;
  c.cadence = 1;
  const NoiseProfileSet prof = make_profiles(ProfileKind::schwartz, 0.5, {}, c.grid, 1, 2.0);
  double mean[3] = {0.0, 0.0, 0.0};
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    c.noise = NoiseSpec{prof, seed, TemporalDriver::brownian};
    for (int level : {0, 1, 2}) {
      c.dt_level = level;
      mean[level] += hamiltonian_evolution_residual(integrate(c), prof).max_abs_residual / 8.0;
    }
  }
  CAPTURE(mean[0]);
  CAPTURE(mean[1]);
  CAPTURE(mean[2]);
  CHECK(mean[1] < mean[0]);
  CHECK(mean[2] < mean[1]);
}

TEST_CASE("virial of the pseudo-conformal bubble vanishes quadratically") {
  const GridSpec g = make_grid(1, 40.0, 4096);
  const ComplexField qf = sample_field(g, [](const Vec2& x) { return q1()(std::abs(x[0])); });
  const double yq = weighted_norm_sq(qf);
  for (double t : {0.0, 0.5, 0.8}) {
    const double w = 1.2;
    const double expect = w * w * (1.0 - t) * (1.0 - t) * yq;
    CHECK(virial(bubble(g, t, w, {1.5, 0.0}), {1.5, 0.0}, std::nullopt) == doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(virial(ComplexField(g), {0.0, 0.0}, std::nullopt) == 0.0);
}

TEST_CASE("cutoff virial is below the uncut one and converges from below") {
  const GridSpec g = make_grid(1, 60.0, 2048);
  const ComplexField v = nlslab::testing::gaussian(g, 1.0, 2.0, {1.0, 0.0});
  const double uncut = virial(v, {0.0, 0.0}, std::nullopt);
  double prev = 0.0;
  for (double m : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    const CutoffSpec c = make_cutoff(m);
    const double cut = virial(v, {0.0, 0.0}, c);
    CHECK(cut <= uncut);
    CHECK(cut >= prev);
    prev = cut;
  }
  CHECK(prev == doctest::Approx(uncut).epsilon(1e-10));

  const CutoffSpec c = make_cutoff(1.0);
  CHECK(c.C > 0.0);
  for (double r = 0.01; r < 4.0; r += 0.01) {
    const double th = CutoffSpec::theta(r), dth = CutoffSpec::theta_prime(r);
    REQUIRE(th <= r * r + 1e-15);
    REQUIRE(dth * dth <= c.C * th + 1e-12);
  }
}

TEST_CASE("virial evolution identity on a soliton run") {
  // The uncut critical virial is exactly quadratic in t, so trapezoid quadrature is exact.
  const Trajectory fine = integrate(soliton_config(1.0, 10));
  CHECK(virial_evolution_residual(fine, {0.0, 0.0}, std::nullopt).max_abs_residual < 1e-6);

  // With a cutoff the soliton crosses the transition shell and the quadrature error shows.
  const Trajectory every = integrate(soliton_config(1.0, 1));
  const Trajectory other = integrate(soliton_config(1.0, 2));
  const VirialEvolution a = virial_evolution_residual(other, {0.0, 0.0}, make_cutoff(1.0));
  const VirialEvolution b = virial_evolution_residual(every, {0.0, 0.0}, make_cutoff(1.0));
  CAPTURE(a.max_abs_residual);
  CAPTURE(b.max_abs_residual);
  CHECK(b.max_abs_residual < 1e-6);
  CHECK(b.max_abs_residual <= 0.5 * a.max_abs_residual);

  EvolveConfig rest = soliton_config(1.0, 10);
  SolitonParams s;
  s.p = 5.0;
  s.solitons.push_back({{0.0, 0.0}, {0.0, 0.0}, 1.0, 0.0});
  rest.initial = solitary_wave(s, 0.0, rest.grid, q1());
  const VirialEvolution r = virial_evolution_residual(integrate(rest), {0.0, 0.0}, make_cutoff(3.0));
  CHECK(r.max_abs_residual < 1e-10);
}

TEST_CASE("localized mass") {
  const GridSpec g = make_grid(1, 40.0, 1024);
  const ComplexField q = q_closed_form_1d(5.0, g).field;
  CHECK(localized_mass(q, {0.0, 0.0}, 100.0) == doctest::Approx(l2_norm_sq(q)).epsilon(1e-14));
  CHECK(localized_mass(q, {0.0, 0.0}, 5.0) > 0.999 * l2_norm_sq(q));
  CHECK(localized_mass(q, {10.0, 0.0}, 1.0) < 1e-6);
}

TEST_CASE("peaks") {
  const GridSpec g = make_grid(1, 40.0, 1024);
  const ComplexField one = nlslab::testing::gaussian(g, 1.0, 1.0, {2.01, 0.0});
  CHECK(peak_center(one)[0] == doctest::Approx(2.01).epsilon(1e-4));
  CHECK_FALSE(has_secondary_peak(one));
  const ComplexField two = one + nlslab::testing::gaussian(g, 0.6, 1.0, {-5.0, 0.0});
  CHECK(has_secondary_peak(two));
  const ComplexField small = one + nlslab::testing::gaussian(g, 0.4, 1.0, {-5.0, 0.0});
  CHECK_FALSE(has_secondary_peak(small));
}

TEST_CASE("modulation fit recovers family members") {
  for (int dim : {1, 2}) {
    const double p = critical_exponent(dim);
    const RadialProfile q = RadialProfile::for_dimension(dim, p);
    // 2D: the box must hold the slow K_0 tail and dx must resolve Q at scale 0.6
    const GridSpec g = dim == 1 ? make_grid(1, 40.0, 2048) : make_grid(2, 30.0, 512);
    ModulationFit m;
    m.lambda = 0.6;
    m.center = {0.37, dim == 2 ? -0.21 : 0.0};
    m.gamma = 0.9;
    const ComplexField v = reconstruct(m, g, q);
    const ModulationFit fit = modulation_fit(v, q);
    CAPTURE(dim);
    CHECK(std::abs(fit.lambda - m.lambda) < 1e-8);
    CHECK(std::abs(fit.center[0] - m.center[0]) < 1e-8);
    CHECK(std::abs(fit.center[1] - m.center[1]) < 1e-8);
    CHECK(std::abs(fit.gamma - m.gamma) < 1e-8);
    CHECK(fit.residual_h1 < 1e-8);
    CHECK(max_abs_diff(reconstruct(fit, g, q), v) < 1e-8);
  }

  const GridSpec g = make_grid(1, 40.0, 1024);
  const ModulationFit fq = modulation_fit(q_closed_form_1d(5.0, g).field, q1());
  CHECK(fq.lambda == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(fq.center[0]) < 1e-9);
  CHECK(std::abs(fq.gamma) < 1e-9);
}

TEST_CASE("modulation scale of the pseudo-conformal bubble") {
  const GridSpec g = make_grid(1, 40.0, 8192);
  const double gq = ground_state_gradient_sq(1, 5.0);
  const ComplexField qf = sample_field(g, [](const Vec2& x) { return q1()(std::abs(x[0])); });
  const double yq = weighted_norm_sq(qf);
  for (double t : {0.5, 0.9}) {
    const double w = 1.0, tau = w * (1.0 - t);
    const double expect = tau / std::sqrt(1.0 + w * w * w * w * (1.0 - t) * (1.0 - t) * yq / (4.0 * gq));
    CHECK(modulation_fit(bubble(g, t, w), q1()).lambda == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("rate fit on synthetic series") {
  std::vector<double> t, g;
  for (int i = 0; i < 200; ++i) {
    t.push_back(0.5 + 0.0024 * i);
    g.push_back(3.0 / (1.0 - t.back()));
  }
  const RateFit f = blowup_rate_fit(t, g);
  CHECK(f.alpha == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(f.T_est - 1.0) < 1e-6);

  std::vector<double> g5;
  for (double v : g) g5.push_back(7.5 * v);
  const RateFit f5 = blowup_rate_fit(t, g5);
  CHECK(f5.alpha == doctest::Approx(f.alpha).epsilon(1e-9));
  CHECK(f5.T_est == doctest::Approx(f.T_est).epsilon(1e-9));
  CHECK(f5.log_C == doctest::Approx(f.log_C + std::log(7.5)).epsilon(1e-9));

  std::vector<double> tl, gl;
  for (int i = 0; i < 400; ++i) {
    const double s = std::pow(10.0, -1.0 - 5.0 * i / 399.0);  // T - t from 0.1 down to 1e-6
    tl.push_back(1.0 - s);
    gl.push_back(std::sqrt(std::log(std::abs(std::log(s))) / s));
  }
  const RateFit fl = blowup_rate_fit(tl, gl);
  CHECK(fl.alpha >= 0.45);
  CHECK(fl.alpha <= 0.6);
  CHECK(fl.loglog_score > 0.0);

  CHECK_THROWS_AS(blowup_rate_fit(std::vector<double>(5, 0.0), std::vector<double>(5, 1.0)), PreconditionError);
}

TEST_CASE("profile residuals") {
  const GridSpec g = make_grid(1, 80.0, 4096);
  BlowupParams b;
  b.T = 1.0;
  b.bubbles = {{{-10.0, 0.0}, 1.0, 0.0}, {{10.0, 0.0}, 1.0, 0.3}};
  const ComplexField s = pseudo_conformal_blowup(b, 0.4, g, q1());
  const ProfileResidual exact = profile_residuals(s, 0.4, b, q1());
  CHECK(exact.global.l2 == 0.0);
  REQUIRE(exact.per_profile.size() == 2);

  const ComplexField gauss = nlslab::testing::gaussian(g, 1.0, 1.0, {0.0, 0.0});
  const ProfileResidual r = profile_residuals(s + cplx(0.01) * gauss, 0.4, b, q1());
  CHECK(std::abs(r.global.l2 - 0.01 * std::sqrt(l2_norm_sq(gauss))) < 1e-6);

  const ProfileResidual rz = profile_residuals(s + cplx(0.01) * gauss, 0.4, b, q1(), cplx(0.01) * gauss);
  CHECK(rz.global.l2 < 1e-15);

  SolitonParams sp;
  sp.p = 3.0;
  sp.solitons = {{{-2.0, 0.0}, {-5.0, 0.0}, 1.0, 0.0}, {{2.0, 0.0}, {5.0, 0.0}, 1.0, 0.0}};
  const RadialProfile q3 = RadialProfile::closed_form_1d(3.0);
  CHECK(profile_residuals(solitary_wave(sp, 0.0, g, q3), 0.0, sp, q3).global.h1 == 0.0);
}

}  // TEST_SUITE
