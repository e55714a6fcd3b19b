#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nlslab/error.hpp"
#include "nlslab/noise.hpp"
#include "test_support.hpp"

using namespace nlslab;
using nlslab::testing::max_abs_diff;

namespace {

std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = t0 + (t1 - t0) * static_cast<double>(i) / n;
  g.back() = t1;
  return g;
}

}  // namespace

TEST_SUITE("noise") {

TEST_CASE("constant profiles give vanishing coefficients") {
  const GridSpec g = make_grid(1, 40.0, 256);
  const NoiseProfileSet s = make_profiles(ProfileKind::constant, 0.7, {}, g, 3);
  const std::vector<double> h{0.3, -1.2, 2.0};
  const LowerOrderCoefficients c = lower_order_coefficients(s, h);
  for (const auto& v : c.a1[0].values) REQUIRE(v == cplx(0.0));
  for (const auto& v : c.a0.values) REQUIRE(v == cplx(0.0));
  for (double m : c.mu.values) REQUIRE(m == doctest::Approx(0.5 * 0.7 * 0.7 * 3.0));
}

TEST_CASE("flat profile: derivatives through order 5 vanish at the flat point") {
  ProfileShape sh;
  sh.kind = ProfileKind::flat;
  sh.dim = 1;
  sh.amplitude = 1.0;
  sh.flat_points = {{0.0, 0.0}};
  auto f = [&](double x) { return sh.value({x, 0.0}); };
  // centered differences of order 1..5 at x = 0
  struct Diffs { double d1, d2, d3, d4, d5; };
  auto diffs = [&](double h) {
    return Diffs{(f(h) - f(-h)) / (2 * h), (f(h) - 2 * f(0) + f(-h)) / (h * h),
                 (f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h * h * h),
                 (f(2 * h) - 4 * f(h) + 6 * f(0) - 4 * f(-h) + f(-2 * h)) / std::pow(h, 4),
                 (f(3 * h) - 4 * f(2 * h) + 5 * f(h) - 5 * f(-h) + 4 * f(-2 * h) - f(-3 * h)) / (2 * std::pow(h, 5))};
  };
  const double h = 1e-2;
  const Diffs a = diffs(h), b = diffs(h / 2);
  CHECK(std::abs(f(0.0)) < 1e-6);
  CHECK(std::abs(a.d1) < 1e-6);
  CHECK(std::abs(a.d2) < 1e-6);
  CHECK(std::abs(a.d3) < 1e-6);
  CHECK(std::abs(a.d5) < 1e-6);
  // the fourth difference is pure O(h^2) truncation of the x^6 term: it vanishes in the limit
  CHECK(a.d4 / b.d4 == doctest::Approx(4.0).epsilon(0.05));
  CHECK(std::abs(b.d4) < 5e-3);
  // and the sixth derivative does not vanish: 6! at x = 0
  const double d6 = (f(3 * h) - 6 * f(2 * h) + 15 * f(h) - 20 * f(0) + 15 * f(-h) - 6 * f(-2 * h) + f(-3 * h)) /
                    std::pow(h, 6);
  CHECK(d6 == doctest::Approx(720.0).epsilon(1e-2));

  const NoiseProfileSet s = make_profiles(ProfileKind::flat, 1.0, {{0.0, 0.0}}, make_grid(1, 40.0, 256));
  CHECK(s.flatness_order == 5);
}

TEST_CASE("profiles are flat at the box edge") {
  for (auto kind : {ProfileKind::schwartz, ProfileKind::flat}) {
    const NoiseProfileSet s = make_profiles(kind, 1.0, {{0.0, 0.0}}, make_grid(1, 40.0, 512));
    CHECK(s.edge_decay < 1e-8);
  }
  // a wide Schwartz profile does not decay enough on a small box
  CHECK_THROWS(make_profiles(ProfileKind::schwartz, 1.0, {}, make_grid(1, 10.0, 128), 1, 4.0));
}

TEST_CASE("invalid profile requests") {
  const GridSpec g = make_grid(1, 40.0, 256);
  CHECK_THROWS_AS(make_profiles(ProfileKind::schwartz, -1.0, {}, g), PreconditionError);
  CHECK_THROWS_AS(make_profiles(ProfileKind::flat, 1.0, {{18.0, 0.0}}, g), PreconditionError);
  CHECK_THROWS_AS(make_profiles(ProfileKind::schwartz, 1.0, {}, g, 9), PreconditionError);
  CHECK_THROWS(parse_profile_kind("wobbly"));
  CHECK(parse_profile_kind("flat") == ProfileKind::flat);
}

TEST_CASE("analytic gradients agree with finite differences") {
  for (int dim : {1, 2}) {
    for (auto kind : {ProfileKind::schwartz, ProfileKind::flat}) {
      ProfileShape sh;
      sh.kind = kind;
      sh.dim = dim;
      sh.amplitude = 0.8;
      sh.sigma = 1.7;
      sh.flat_points = {{1.0, dim == 2 ? -0.5 : 0.0}, {-1.5, 0.0}};
      const double h = 1e-5;
      for (const Vec2 x : {Vec2{0.3, dim == 2 ? 0.2 : 0.0}, Vec2{-2.1, dim == 2 ? 1.1 : 0.0}}) {
        const Vec2 grad = sh.gradient(x);
        double lap = 0.0;
        for (int a = 0; a < dim; ++a) {
          Vec2 xp = x, xm = x;
          xp[a] += h;
          xm[a] -= h;
          CHECK(std::abs((sh.value(xp) - sh.value(xm)) / (2 * h) - grad[a]) < 1e-6);
          // Richardson-extrapolated second difference
          auto second = [&](double s) {
            Vec2 p = x, m = x;
            p[a] += s;
            m[a] -= s;
            return (sh.value(p) - 2 * sh.value(x) + sh.value(m)) / (s * s);
          };
          lap += (4.0 * second(5e-4) - second(1e-3)) / 3.0;
        }
        CHECK(std::abs(lap - sh.laplacian(x)) < 1e-5);
      }
    }
  }
}

TEST_CASE("a1 and a0 vanish at flat points, Re a0 <= 0") {
  const GridSpec g = make_grid(1, 40.0, 512);
  const NoiseProfileSet s = make_profiles(ProfileKind::flat, 1.0, {{0.0, 0.0}}, g, 2);
  const std::vector<double> h{0.8, -1.3};
  const LowerOrderCoefficients c = lower_order_coefficients(s, h);
  const std::size_t center = g.points / 2;  // x = 0
  CHECK(std::abs(c.a1[0][center]) < 1e-14);
  CHECK(std::abs(c.a0[center]) < 1e-14);
  for (const auto& v : c.a0.values) REQUIRE(v.real() <= 0.0);
}

TEST_CASE("standard normals are reproducible") {
  CHECK(standard_normal(1, 0, 0, 0, 0) == standard_normal(1, 0, 0, 0, 0));
  CHECK(standard_normal(1, 0, 0, 0, 0) != standard_normal(2, 0, 0, 0, 0));
  CHECK(standard_normal(1, 0, 3, 2, 1) != standard_normal(1, 1, 3, 2, 1));
}

TEST_CASE("same seed, same path") {
  const auto grid = uniform_grid(0.0, 1.0, 100);
  const BrownianPath a = BrownianPath::sample(17, grid, 2).refined(3);
  const BrownianPath b = BrownianPath::sample(17, grid, 2).refined(3);
  for (std::size_t l = 0; l < 2; ++l)
    CHECK(std::equal(a.values(l).begin(), a.values(l).end(), b.values(l).begin()));
  CHECK(a.value(0, 0) == 0.0);
}

TEST_CASE("bridge refinement keeps coarse nodes bitwise") {
  const auto grid = uniform_grid(0.0, 2.0, 16);
  const BrownianPath coarse = BrownianPath::sample(5, grid, 1);
  const BrownianPath fine = coarse.refined(4);
  REQUIRE(fine.times().size() == 16 * 16 + 1);
  for (std::size_t i = 0; i <= 16; ++i) REQUIRE(fine.value(0, 16 * i) == coarse.value(0, i));
  const BrownianPath mid = coarse.refined(2);
  for (std::size_t i = 0; i < mid.times().size(); ++i) REQUIRE(fine.value(0, 4 * i) == mid.value(0, i));
  CHECK(fine.node_index(1.0) == 128);
  CHECK_THROWS(fine.node_index(0.001));
  const auto iv = coarse.interval_values(0, 3, 4);
  for (std::size_t j = 0; j < iv.size(); ++j) REQUIRE(iv[j] == fine.value(0, 48 + j));
}

TEST_CASE("Monte Carlo: Var B(1) = 1 and independent increments") {
  const auto grid = uniform_grid(0.0, 1.0, 4);
  const int paths = 10000;
  double sum = 0.0, sum_sq = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (int n = 0; n < paths; ++n) {
    const BrownianPath p = BrownianPath::sample(1000 + n, grid, 1).refined(2);
    const double b1 = p.value(0, p.times().size() - 1);
    sum += b1;
    sum_sq += b1 * b1;
    // two disjoint increments, one of them at a bridge level
    const double x = p.increment(0, 0), y = p.increment(0, 9);
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  const double mean = sum / paths;
  const double var = sum_sq / paths - mean * mean;
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0) / 100.0);
  const double cov = sxy / paths - (sx / paths) * (sy / paths);
  const double corr = cov / std::sqrt((sxx / paths - sx * sx / paths / paths) * (syy / paths - sy * sy / paths / paths));
  CHECK(std::abs(corr) < 0.05);
}

TEST_CASE("gauge transform: modulus, mass and round trip") {
  const GridSpec g = make_grid(1, 40.0, 512);
  const NoiseProfileSet s = make_profiles(ProfileKind::schwartz, 0.9, {}, g, 2);
  const ComplexField X = sample_field(g, [](const Vec2& x) { return std::polar(1.0 / std::cosh(x[0]), 0.4 * x[0]); });
  const std::vector<double> h{1.7, -0.4};
  const ComplexField v = gauge_transform(X, s, h, GaugeDirection::to_gauged);
  for (std::size_t i = 0; i < X.size(); ++i) REQUIRE(std::abs(v[i]) == doctest::Approx(std::abs(X[i])).epsilon(1e-15));
  CHECK(l2_norm_sq(v) == doctest::Approx(l2_norm_sq(X)).epsilon(1e-15));
  const ComplexField back = gauge_transform(v, s, h, GaugeDirection::to_physical);
  CHECK(max_abs_diff(back, X) < 1e-15);

  const BrownianPath path = BrownianPath::sample(9, uniform_grid(0.0, 1.0, 10), 2);
  const ComplexField vp = gauge_transform(X, s, path, 0.5, GaugeDirection::to_gauged);
  const std::vector<double> hp{path.value(0, 5), path.value(1, 5)};
  CHECK(vp.values == gauge_transform(X, s, hp, GaugeDirection::to_gauged).values);
}

}  // TEST_SUITE
