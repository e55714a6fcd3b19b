#include "nlslab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "nlslab/error.hpp"

namespace nlslab {

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::constant: return "constant";
    case ProfileKind::flat: return "flat";
    case ProfileKind::schwartz: return "schwartz";
  }
  return "constant";
}

ProfileKind parse_profile_kind(std::string_view name) {
  if (name == "constant") return ProfileKind::constant;
  if (name == "flat") return ProfileKind::flat;
  if (name == "schwartz") return ProfileKind::schwartz;
  throw ConfigError("unknown noise profile kind: " + std::string(name));
}

// --- shapes -------------------------------------------------------------------

namespace {

// g(s) = s^3 e^{-s} with s = |x - x_k|^2 and its s-derivatives.
struct FlatFactor {
  double g, dg, d2g;
};

FlatFactor flat_factor(double s) {
  const double e = std::exp(-s);
  return {s * s * s * e, (3.0 * s * s - s * s * s) * e, (6.0 * s - 6.0 * s * s + s * s * s) * e};
}

struct FlatTerm {
  double value;
  Vec2 grad;
  double lap;
};

FlatTerm flat_term(const Vec2& x, const Vec2& xk, int dim) {
  const double d0 = x[0] - xk[0];
  const double d1 = dim == 2 ? x[1] - xk[1] : 0.0;
  const double s = d0 * d0 + d1 * d1;
  const FlatFactor f = flat_factor(s);
  // grad g = 2 g'(s) (x - x_k),  Delta g = 4 s g''(s) + 2 d g'(s)
  return {f.g, {2.0 * f.dg * d0, 2.0 * f.dg * d1}, 4.0 * s * f.d2g + 2.0 * dim * f.dg};
}

}  // namespace

double ProfileShape::value(const Vec2& x) const {
  switch (kind) {
    case ProfileKind::constant: return amplitude;
    case ProfileKind::schwartz:
      return amplitude * std::exp(-(x[0] * x[0] + x[1] * x[1]) / (sigma * sigma));
    case ProfileKind::flat: {
      double v = amplitude;
      for (const auto& xk : flat_points) v *= flat_term(x, xk, dim).value;
      return v;
    }
  }
  return 0.0;
}

Vec2 ProfileShape::gradient(const Vec2& x) const {
  switch (kind) {
    case ProfileKind::constant: return {0.0, 0.0};
    case ProfileKind::schwartz: {
      const double v = value(x);
      const double c = -2.0 / (sigma * sigma);
      return {c * x[0] * v, dim == 2 ? c * x[1] * v : 0.0};
    }
    case ProfileKind::flat: {
      // Product rule: sum_k grad g_k prod_{j != k} g_j.
      Vec2 g{0.0, 0.0};
      std::vector<FlatTerm> terms;
      for (const auto& xk : flat_points) terms.push_back(flat_term(x, xk, dim));
      for (std::size_t k = 0; k < terms.size(); ++k) {
        double others = amplitude;
        for (std::size_t j = 0; j < terms.size(); ++j)
          if (j != k) others *= terms[j].value;
        g[0] += terms[k].grad[0] * others;
        g[1] += terms[k].grad[1] * others;
      }
      return g;
    }
  }
  return {0.0, 0.0};
}

double ProfileShape::laplacian(const Vec2& x) const {
  switch (kind) {
    case ProfileKind::constant: return 0.0;
    case ProfileKind::schwartz: {
      const double s2 = sigma * sigma;
      const double r2 = x[0] * x[0] + (dim == 2 ? x[1] * x[1] : 0.0);
      return value(x) * (4.0 * r2 / (s2 * s2) - 2.0 * dim / s2);
    }
    case ProfileKind::flat: {
      std::vector<FlatTerm> terms;
      for (const auto& xk : flat_points) terms.push_back(flat_term(x, xk, dim));
      double lap = 0.0;
      for (std::size_t k = 0; k < terms.size(); ++k) {
        double others = amplitude;
        for (std::size_t j = 0; j < terms.size(); ++j)
          if (j != k) others *= terms[j].value;
        lap += terms[k].lap * others;
        for (std::size_t j = 0; j < terms.size(); ++j) {
          if (j == k) continue;
          double rest = amplitude;
          for (std::size_t m = 0; m < terms.size(); ++m)
            if (m != k && m != j) rest *= terms[m].value;
          lap += (terms[k].grad[0] * terms[j].grad[0] + terms[k].grad[1] * terms[j].grad[1]) * rest;
        }
      }
      return lap;
    }
  }
  return 0.0;
}

NoiseProfileSet make_profiles(ProfileKind kind, double amplitude, std::vector<Vec2> flat_points,
                              const GridSpec& grid, std::size_t modes, double sigma) {
  if (!(amplitude >= 0.0)) throw PreconditionError("noise amplitude must be nonnegative");
  if (modes == 0 || modes > 8) throw PreconditionError("number of noise modes must be in 1..8");
  if (kind == ProfileKind::schwartz && !(sigma > 0.0))
    throw PreconditionError("Schwartz profile width must be positive");
  if (kind == ProfileKind::flat && flat_points.empty())
    throw PreconditionError("flat profile needs at least one flat point");
  const double half = 0.5 * grid.extent;
  for (const auto& xk : flat_points) {
    const double reach = std::max(std::abs(xk[0]), grid.dim == 2 ? std::abs(xk[1]) : 0.0);
    if (reach > half - 5.0) throw PreconditionError("flat point closer than 5 to the box edge");
  }

  NoiseProfileSet set;
  set.shape = ProfileShape{kind, grid.dim, amplitude, sigma,
                           kind == ProfileKind::flat ? flat_points : std::vector<Vec2>{}};
  set.grid = grid;
  set.modes = modes;
  set.flatness_order = kind == ProfileKind::flat ? 5 : 0;
  set.phi = RealField(grid);
  set.lap = RealField(grid);
  set.grad.assign(static_cast<std::size_t>(grid.dim), RealField(grid));
  const double edge = half - grid.spacing();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec2 x = grid.point(i);
    set.phi.values[i] = set.shape.value(x);
    const Vec2 g = set.shape.gradient(x);
    set.grad[0].values[i] = g[0];
    if (grid.dim == 2) set.grad[1].values[i] = g[1];
    set.lap.values[i] = set.shape.laplacian(x);
    if (std::max(std::abs(x[0]), std::abs(x[1])) >= edge) {
      const double weight = 1.0 + x[0] * x[0] + x[1] * x[1];
      const double deriv = std::hypot(g[0], g[1]) + std::abs(set.lap.values[i]);
      set.edge_decay = std::max(set.edge_decay, weight * deriv);
    }
  }
  if (set.edge_decay >= 1e-8)
    throw PreconditionError("noise profile is not asymptotically flat at the box edge");
  return set;
}

// --- Brownian paths -------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

}  // namespace

double standard_normal(std::uint64_t seed, std::uint64_t mode, std::uint64_t interval,
                       std::uint64_t level, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = combine(h, mode);
  h = combine(h, interval);
  h = combine(h, level);
  h = combine(h, index);
  const std::uint64_t h2 = splitmix64(h);
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = static_cast<double>((h >> 11) + 1) * scale;  // (0, 1]
  const double u2 = static_cast<double>(h2 >> 11) * scale;       // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

BrownianPath BrownianPath::sample(std::uint64_t seed, std::vector<double> base_grid,
                                  std::size_t modes) {
  if (base_grid.size() < 2) throw PreconditionError("Brownian step grid needs two nodes");
  for (std::size_t i = 1; i < base_grid.size(); ++i)
    if (!(base_grid[i] > base_grid[i - 1]))
      throw PreconditionError("Brownian step grid must be strictly increasing");
  if (modes == 0) throw PreconditionError("Brownian path needs at least one mode");
  BrownianPath path;
  path.seed_ = seed;
  path.modes_ = modes;
  path.level_ = 0;
  path.base_times_ = std::move(base_grid);
  path.base_values_.assign(modes, std::vector<double>(path.base_times_.size(), 0.0));
  for (std::size_t l = 0; l < modes; ++l) {
    for (std::size_t i = 0; i + 1 < path.base_times_.size(); ++i) {
      const double dt = path.base_times_[i + 1] - path.base_times_[i];
      path.base_values_[l][i + 1] =
          path.base_values_[l][i] + std::sqrt(dt) * standard_normal(seed, l, i, 0, 0);
    }
  }
  path.times_ = path.base_times_;
  path.values_ = path.base_values_;
  return path;
}

std::vector<double> BrownianPath::interval_values(std::size_t mode, std::size_t interval,
                                                  int level) const {
  const std::size_t count = (std::size_t{1} << level) + 1;
  std::vector<double> table(count);
  table.front() = base_values_[mode][interval];
  table.back() = base_values_[mode][interval + 1];
  const double dt = base_times_[interval + 1] - base_times_[interval];
  for (int j = 1; j <= level; ++j) {
    const std::size_t stride = std::size_t{1} << (level - j);
    const double parent = dt / static_cast<double>(std::size_t{1} << (j - 1));
    const double sd = std::sqrt(0.25 * parent);
    for (std::size_t k = 1; k < (std::size_t{1} << j); k += 2) {
      const std::size_t at = k * stride;
      table[at] = 0.5 * (table[at - stride] + table[at + stride]) +
                  sd * standard_normal(seed_, mode, interval, static_cast<std::uint64_t>(j), k);
    }
  }
  return table;
}

BrownianPath BrownianPath::refined() const { return refined(1); }

BrownianPath BrownianPath::refined(int levels) const {
  BrownianPath out = *this;
  out.level_ = level_ + levels;
  const std::size_t sub = std::size_t{1} << out.level_;
  const std::size_t intervals = base_times_.size() - 1;
  out.times_.assign(intervals * sub + 1, 0.0);
  for (std::size_t i = 0; i < intervals; ++i) {
    const double t0 = base_times_[i];
    const double dt = base_times_[i + 1] - t0;
    for (std::size_t k = 0; k < sub; ++k)
      out.times_[i * sub + k] = t0 + dt * (static_cast<double>(k) / static_cast<double>(sub));
  }
  out.times_.back() = base_times_.back();
  out.values_.assign(modes_, std::vector<double>(out.times_.size(), 0.0));
  for (std::size_t l = 0; l < modes_; ++l) {
    for (std::size_t i = 0; i < intervals; ++i) {
      const auto table = interval_values(l, i, out.level_);
      std::copy(table.begin(), table.end() - 1, out.values_[l].begin() + static_cast<long>(i * sub));
    }
    out.values_[l].back() = base_values_[l].back();
  }
  return out;
}

std::size_t BrownianPath::node_index(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end() || *it != t) throw PreconditionError("time is not a node of the path");
  return static_cast<std::size_t>(it - times_.begin());
}

// --- gauge --------------------------------------------------------------------

namespace {

std::vector<double> path_values_at(const BrownianPath& path, double t) {
  const std::size_t node = path.node_index(t);
  std::vector<double> h(path.modes());
  for (std::size_t l = 0; l < path.modes(); ++l) h[l] = path.value(l, node);
  return h;
}

double driver_sum(const NoiseProfileSet& profiles, std::span<const double> h) {
  if (h.size() != profiles.modes) throw PreconditionError("driver count does not match modes");
  return std::accumulate(h.begin(), h.end(), 0.0);
}

}  // namespace

ComplexField gauge_transform(const ComplexField& field, const NoiseProfileSet& profiles,
                             std::span<const double> h, GaugeDirection direction) {
  require_same_grid(field.grid, profiles.grid);
  const double sum = driver_sum(profiles, h);
  const double sign = direction == GaugeDirection::to_gauged ? -1.0 : 1.0;
  ComplexField out = field;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= std::polar(1.0, sign * profiles.phi.values[i] * sum);
  return out;
}

ComplexField gauge_transform(const ComplexField& field, const NoiseProfileSet& profiles,
                             const BrownianPath& path, double t, GaugeDirection direction) {
  return gauge_transform(field, profiles, path_values_at(path, t), direction);
}

LowerOrderCoefficients lower_order_coefficients(const NoiseProfileSet& profiles,
                                                std::span<const double> h) {
  const GridSpec& g = profiles.grid;
  const double sum = driver_sum(profiles, h);
  const cplx I(0.0, 1.0);
  LowerOrderCoefficients c;
  c.a1.assign(static_cast<std::size_t>(g.dim), ComplexField(g));
  c.a0 = ComplexField(g);
  c.mu = RealField(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double grad_sq = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double gpsi = profiles.grad[static_cast<std::size_t>(a)].values[i] * sum;
      c.a1[static_cast<std::size_t>(a)][i] = 2.0 * I * gpsi;
      grad_sq += gpsi * gpsi;
    }
    c.a0[i] = cplx(-grad_sq, profiles.lap.values[i] * sum);
    const double phi = profiles.phi.values[i];
    c.mu.values[i] = 0.5 * static_cast<double>(profiles.modes) * phi * phi;
  }
  return c;
}

LowerOrderCoefficients lower_order_coefficients(const NoiseProfileSet& profiles,
                                                const BrownianPath& path, double t) {
  return lower_order_coefficients(profiles, path_values_at(path, t));
}

}  // namespace nlslab
