#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlslab/grid.hpp"

namespace nlslab {

enum class ProfileKind { constant, flat, schwartz };

std::string to_string(ProfileKind kind);
ProfileKind parse_profile_kind(std::string_view name);

/// Closed-form spatial profile phi and its derivatives.
///   constant: a
///   schwartz: a exp(-|x|^2 / sigma^2)
///   flat:     a prod_k |x - x_k|^6 exp(-|x - x_k|^2)   (derivatives through order 5 vanish at x_k)
struct ProfileShape {
  ProfileKind kind = ProfileKind::constant;
  int dim = 1;
  double amplitude = 0.0;
  double sigma = 2.0;
  std::vector<Vec2> flat_points;

  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  double laplacian(const Vec2& x) const;
};

/// The spatial profiles phi_l, l = 1..modes, sampled on a grid. All modes share
/// one shape; independence comes from the Brownian motions B_l.
struct NoiseProfileSet {
  ProfileShape shape;
  GridSpec grid;
  std::size_t modes = 1;
  int flatness_order = 0;  // derivatives of order <= this vanish at every flat point
  RealField phi;
  std::vector<RealField> grad;  // analytic gradient, one field per axis
  RealField lap;                // analytic Laplacian
  double edge_decay = 0.0;      // max over the box edge of <x>^2 (|grad phi| + |lap phi|)

  ProfileKind kind() const { return shape.kind; }
};

/// Throws if a flat point lies within 5 units of the box edge, if amplitude < 0,
/// or if the profile is not flat (<x>^2 |d phi| < 1e-8) at the box edge.
NoiseProfileSet make_profiles(ProfileKind kind, double amplitude, std::vector<Vec2> flat_points,
                              const GridSpec& grid, std::size_t modes = 1, double sigma = 2.0);

/// Standard normal deviate addressed by (seed, mode, interval, level, index):
/// splitmix64 hashing followed by the Box-Muller cosine branch. Identical on
/// every run, independent of evaluation order.
double standard_normal(std::uint64_t seed, std::uint64_t mode, std::uint64_t interval,
                       std::uint64_t level, std::uint64_t index);

/// Brownian motions B_1..B_modes on a base step grid, refined dyadically by
/// midpoint bridge sampling. Nodes of a coarse level are reproduced bitwise by
/// every finer level.
class BrownianPath {
 public:
  static BrownianPath sample(std::uint64_t seed, std::vector<double> base_grid, std::size_t modes);

  BrownianPath refined() const;
  BrownianPath refined(int levels) const;

  std::uint64_t seed() const { return seed_; }
  std::size_t modes() const { return modes_; }
  int level() const { return level_; }
  const std::vector<double>& base_times() const { return base_times_; }
  const std::vector<double>& times() const { return times_; }

  double value(std::size_t mode, std::size_t node) const { return values_[mode][node]; }
  double increment(std::size_t mode, std::size_t step) const {
    return values_[mode][step + 1] - values_[mode][step];
  }
  std::span<const double> values(std::size_t mode) const { return values_[mode]; }

  /// Node index of time t at this level; throws if t is not a node.
  std::size_t node_index(double t) const;

  /// Bridge values at the 2^level + 1 nodes of base interval `interval`.
  std::vector<double> interval_values(std::size_t mode, std::size_t interval, int level) const;

 private:
  std::uint64_t seed_ = 0;
  std::size_t modes_ = 1;
  int level_ = 0;
  std::vector<double> base_times_;
  std::vector<std::vector<double>> base_values_;  // [mode][base node]
  std::vector<double> times_;
  std::vector<std::vector<double>> values_;  // [mode][node]
};

enum class GaugeDirection {
  to_gauged,    // v = e^{-W} X
  to_physical,  // X = e^{W} v
};

/// Multiplies pointwise by e^{-/+ W}, W = i sum_l phi_l h_l. |result| = |X|.
ComplexField gauge_transform(const ComplexField& field, const NoiseProfileSet& profiles,
                             std::span<const double> h, GaugeDirection direction);
/// Same with h_l = B_l(t); t must be a node of the path.
ComplexField gauge_transform(const ComplexField& field, const NoiseProfileSet& profiles,
                             const BrownianPath& path, double t, GaugeDirection direction);

struct LowerOrderCoefficients {
  std::vector<ComplexField> a1;  // 2 i sum_l grad phi_l h_l
  ComplexField a0;               // -sum_j (sum_l d_j phi_l h_l)^2 + i sum_l Delta phi_l h_l
  RealField mu;                  // 1/2 sum_l phi_l^2
};

LowerOrderCoefficients lower_order_coefficients(const NoiseProfileSet& profiles,
                                                std::span<const double> h);
LowerOrderCoefficients lower_order_coefficients(const NoiseProfileSet& profiles,
                                                const BrownianPath& path, double t);

}  // namespace nlslab
