#pragma once

#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/ground_state.hpp"

namespace nlslab {

struct Bubble {
  Vec2 x{0.0, 0.0};  // singular point x_k
  double w = 1.0;    // scale
  double theta = 0.0;
};

struct BlowupParams {
  double T = 1.0;
  std::vector<Bubble> bubbles;
};

struct Soliton {
  Vec2 c{0.0, 0.0};   // velocity
  Vec2 x0{0.0, 0.0};  // position at t = 0
  double w = 1.0;
  double theta = 0.0;
};

struct SolitonParams {
  std::vector<Soliton> solitons;
  double p = 5.0;
};

void validate(const BlowupParams& params);
void validate(const SolitonParams& params);

/// Sum over k of
///   (w_k(T-t))^{-d/2} Q((x-x_k)/(w_k(T-t))) exp(-i|x-x_k|^2/(4(T-t)) + i/(w_k^2(T-t)) + i theta_k).
/// Throws when t >= T or when some width w_k(T-t) < 4 dx.
ComplexField pseudo_conformal_blowup(const BlowupParams& params, double t, const GridSpec& grid,
                                     const RadialProfile& q);

/// Sum over k of  w_k^{-2/(p-1)} Q((x - c_k t - x0_k)/w_k)
///   exp(i(c_k.x/2 - |c_k|^2 t/4 + t/w_k^2 + theta_k)).
/// Throws when a center leaves the box minus a 5 w_k margin.
ComplexField solitary_wave(const SolitonParams& params, double t, const GridSpec& grid,
                           const RadialProfile& q);

enum class ConformalDirection { forward, inverse };

struct MappedField {
  ComplexField field;
  double mapped_time = 0.0;
};

/// forward: f is u(s) with s = 1/(T-t); returns
///   (T-t)^{-d/2} f(x/(T-t)) e^{-i|x|^2/(4(T-t))}  at time t, mapped_time = s.
/// inverse: f is z(T - 1/t); returns
///   t^{-d/2} f(x/t) e^{i|x|^2/(4t)}  at time t, mapped_time = T - 1/t.
/// Requires t < T (forward) or t > 0 (inverse). Off-grid values come from trigonometric interpolation. Throws if the map
/// would push more than `leak_tol` of the mass out of the box.
MappedField pseudo_conformal_map(const ComplexField& f, double t, double T,
                                 ConformalDirection direction, double leak_tol = 1e-10);

}  // namespace nlslab
