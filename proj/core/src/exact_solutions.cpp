#include "nlslab/exact_solutions.hpp"

#include <cmath>

#include "nlslab/error.hpp"

namespace nlslab {

void validate(const BlowupParams& params) {
  if (!std::isfinite(params.T)) throw PreconditionError("blow-up time must be finite");
  for (std::size_t k = 0; k < params.bubbles.size(); ++k) {
    if (!(params.bubbles[k].w > 0.0)) throw PreconditionError("bubble scale must be positive");
    for (std::size_t j = 0; j < k; ++j)
      if (params.bubbles[j].x == params.bubbles[k].x)
        throw PreconditionError("bubble positions must be distinct");
  }
}

void validate(const SolitonParams& params) {
  for (std::size_t k = 0; k < params.solitons.size(); ++k) {
    if (!(params.solitons[k].w > 0.0)) throw PreconditionError("soliton scale must be positive");
    for (std::size_t j = 0; j < k; ++j)
      if (params.solitons[j].c == params.solitons[k].c)
        throw PreconditionError("soliton velocities must be pairwise distinct");
  }
}

ComplexField pseudo_conformal_blowup(const BlowupParams& params, double t, const GridSpec& grid,
                                     const RadialProfile& q) {
  validate(params);
  if (!(t < params.T)) throw PreconditionError("pseudo-conformal profile needs t < T");
  if (q.dim() != grid.dim) throw PreconditionError("profile dimension does not match grid");
  const double s = params.T - t;
  const double d = grid.dim;
  ComplexField out(grid);
  for (const auto& b : params.bubbles) {
    const double width = b.w * s;
    if (width < 4.0 * grid.spacing())
      throw PreconditionError("bubble width w(T-t) is below 4 dx (outside the valid window)");
    const double amp = std::pow(width, -0.5 * d);
    const double phase0 = 1.0 / (b.w * b.w * s) + b.theta;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Vec2 x = grid.point(i);
      const double dx0 = x[0] - b.x[0];
      const double dx1 = grid.dim == 2 ? x[1] - b.x[1] : 0.0;
      const double r2 = dx0 * dx0 + dx1 * dx1;
      out[i] += amp * q(std::sqrt(r2) / width) * std::polar(1.0, -0.25 * r2 / s + phase0);
    }
  }
  return out;
}

ComplexField solitary_wave(const SolitonParams& params, double t, const GridSpec& grid,
                           const RadialProfile& q) {
  validate(params);
  if (q.dim() != grid.dim) throw PreconditionError("profile dimension does not match grid");
  const double p = params.p;
  ComplexField out(grid);
  for (const auto& sol : params.solitons) {
    const Vec2 center{sol.x0[0] + sol.c[0] * t, sol.x0[1] + sol.c[1] * t};
    const double reach = 0.5 * grid.extent - 5.0 * sol.w;
    if (std::abs(center[0]) > reach || (grid.dim == 2 && std::abs(center[1]) > reach))
      throw PreconditionError("soliton center is outside the safe region of the box");
    const double amp = std::pow(sol.w, -2.0 / (p - 1.0));
    const double c2 = sol.c[0] * sol.c[0] + (grid.dim == 2 ? sol.c[1] * sol.c[1] : 0.0);
    const double phase0 = -0.25 * c2 * t + t / (sol.w * sol.w) + sol.theta;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Vec2 x = grid.point(i);
      const double y0 = x[0] - center[0];
      const double y1 = grid.dim == 2 ? x[1] - center[1] : 0.0;
      const double cx = sol.c[0] * x[0] + (grid.dim == 2 ? sol.c[1] * x[1] : 0.0);
      out[i] += amp * q(std::sqrt(y0 * y0 + y1 * y1) / sol.w) * std::polar(1.0, 0.5 * cx + phase0);
    }
  }
  return out;
}

MappedField pseudo_conformal_map(const ComplexField& f, double t, double T,
                                 ConformalDirection direction, double leak_tol) {
  const GridSpec& g = f.grid;
  const double d = g.dim;
  double factor = 0.0;  // spatial dilation: out(x) uses f(x / factor)
  double chirp = 0.0;   // out(x) *= exp(i chirp |x|^2)
  MappedField out;
  if (direction == ConformalDirection::forward) {
    if (!(t < T)) throw PreconditionError("pseudo-conformal map needs t < T");
    factor = T - t;
    chirp = -0.25 / factor;
    out.mapped_time = 1.0 / (T - t);
  } else {
    if (!(t > 0.0)) throw PreconditionError("inverse pseudo-conformal map needs t > 0");
    factor = t;
    chirp = 0.25 / t;
    out.mapped_time = T - 1.0 / t;
  }
  // Content of f beyond |y| = L/(2|factor|) lands outside the box.
  const double visible = 0.5 * g.extent / factor;
  if (visible < 0.5 * g.extent) {
    const double total = l2_norm_sq(f);
    if (mass_outside_box(f, visible) > leak_tol * std::max(total, 1e-300))
      throw PreconditionError("pseudo-conformal dilation pushes mass outside the box");
  }
  out.field = sample_affine(f, 1.0 / factor, {0.0, 0.0});
  const double amp = std::pow(factor, -0.5 * d);
  for (std::size_t i = 0; i < out.field.size(); ++i) {
    const Vec2 x = g.point(i);
    out.field[i] *= amp * std::polar(1.0, chirp * (x[0] * x[0] + x[1] * x[1]));
  }
  return out;
}

}  // namespace nlslab
