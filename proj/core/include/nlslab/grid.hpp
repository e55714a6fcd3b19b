#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nlslab {

using cplx = std::complex<double>;
using Vec2 = std::array<double, 2>;

/// Uniform periodic grid on the box [-L/2, L/2)^d, d in {1, 2}.
struct GridSpec {
  int dim = 1;
  double extent = 0.0;     // L, per axis
  std::size_t points = 0;  // N, per axis

  double spacing() const { return extent / static_cast<double>(points); }
  double cell_volume() const { return dim == 1 ? spacing() : spacing() * spacing(); }
  std::size_t size() const { return dim == 1 ? points : points * points; }
  double coordinate(std::size_t j) const {
    return -0.5 * extent + static_cast<double>(j) * spacing();
  }
  std::vector<double> coordinates() const;
  /// 2*pi*k/L in standard DFT ordering: 0, 1, ..., N/2-1, -N/2, ..., -1.
  std::vector<double> wavenumbers() const;
  /// Physical position of a flat (row-major) index. y is 0 in 1D.
  Vec2 point(std::size_t flat) const;

  bool operator==(const GridSpec&) const = default;
};

GridSpec make_grid(int dim, double extent, std::size_t points);

/// Complex samples on a grid, row-major (first axis slowest).
struct ComplexField {
  GridSpec grid;
  std::vector<cplx> values;

  ComplexField() = default;
  explicit ComplexField(const GridSpec& g) : grid(g), values(g.size()) {}
  ComplexField(const GridSpec& g, std::vector<cplx> v);

  std::size_t size() const { return values.size(); }
  cplx& operator[](std::size_t i) { return values[i]; }
  const cplx& operator[](std::size_t i) const { return values[i]; }

  bool all_finite() const;

  ComplexField& operator+=(const ComplexField& o);
  ComplexField& operator-=(const ComplexField& o);
  ComplexField& operator*=(cplx s);
};

ComplexField operator+(ComplexField a, const ComplexField& b);
ComplexField operator-(ComplexField a, const ComplexField& b);
ComplexField operator*(cplx s, ComplexField a);
ComplexField conj(ComplexField f);

/// Real samples on a grid (noise profiles, cutoffs, coefficients).
struct RealField {
  GridSpec grid;
  std::vector<double> values;

  RealField() = default;
  explicit RealField(const GridSpec& g) : grid(g), values(g.size(), 0.0) {}
};

template <class F>
ComplexField sample_field(const GridSpec& grid, F&& fn) {
  ComplexField out(grid);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cplx(fn(grid.point(i)));
  return out;
}

template <class F>
RealField sample_real(const GridSpec& grid, F&& fn) {
  RealField out(grid);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = fn(grid.point(i));
  return out;
}

void require_same_grid(const GridSpec& a, const GridSpec& b);

// --- spectral calculus ------------------------------------------------------

struct SpectralDerivatives {
  std::vector<ComplexField> gradient;  // one component per axis
  ComplexField laplacian;
};

/// Exact on band-limited fields. The Nyquist mode is dropped from odd
/// derivatives and kept (as -k^2) in the Laplacian.
SpectralDerivatives spectral_derivatives(const ComplexField& f);
std::vector<ComplexField> gradient(const ComplexField& f);
ComplexField laplacian(const ComplexField& f);

// --- quadrature ---------------------------------------------------------------

/// Integral of |f|^2 (equal-weight rule, exact for the DFT).
double l2_norm_sq(const ComplexField& f);
/// Integral of |f|^p.
double lp_integral(const ComplexField& f, double p);
/// Integral of |grad f|^2, evaluated on the spectral side.
double gradient_norm_sq(const ComplexField& f);
/// Integral of |x|^2 |f|^2 with x measured from the box center.
double weighted_norm_sq(const ComplexField& f);

/// H(v) = 1/2 ||grad v||^2 - d/(2d+4) ||v||_{2+4/d}^{2+4/d}  (L^2-critical energy).
double hamiltonian(const ComplexField& v);

/// <f, g> = integral of conj(f) g.
cplx l2_inner(const ComplexField& f, const ComplexField& g);

struct NormSuite {
  double l2 = 0.0;
  double lp = 0.0;  // p = 2 + 4/d
  double h1 = 0.0;
  double sigma = 0.0;
  double weighted = 0.0;  // ||x f||_{L^2}
  double gradient = 0.0;  // ||grad f||_{L^2}
};

NormSuite norm_suite(const ComplexField& f);

// --- resampling ---------------------------------------------------------------

/// g(x) = f(scale * x + shift), evaluated by trigonometric interpolation of f.
/// Points mapped outside the box are set to zero.
ComplexField sample_affine(const ComplexField& f, double scale, const Vec2& shift);

/// Mass of f outside the centered box of half-width r (max-norm ball).
double mass_outside_box(const ComplexField& f, double half_width);

// --- snapshot files -----------------------------------------------------------

struct Snapshot {
  ComplexField field;
  double time = 0.0;
};

/// Header `d,N,L,t`, then N^d lines `re,im`, 17 significant digits.
void write_snapshot(std::ostream& os, const ComplexField& f, double t);
void write_snapshot_file(const std::string& path, const ComplexField& f, double t);
Snapshot read_snapshot(std::istream& is);
Snapshot read_snapshot_file(const std::string& path);

/// printf("%.17g").
std::string format_double(double v);

}  // namespace nlslab
