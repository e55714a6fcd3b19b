#include "nlslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nlslab/error.hpp"
#include "nlslab/fft.hpp"

namespace nlslab {

std::vector<double> GridSpec::coordinates() const {
  std::vector<double> x(points);
  for (std::size_t j = 0; j < points; ++j) x[j] = coordinate(j);
  return x;
}

std::vector<double> GridSpec::wavenumbers() const {
  std::vector<double> k(points);
  const double base = 2.0 * std::numbers::pi / extent;
  const auto n = static_cast<long>(points);
  for (long j = 0; j < n; ++j) k[j] = base * static_cast<double>(j < n / 2 ? j : j - n);
  return k;
}

Vec2 GridSpec::point(std::size_t flat) const {
  if (dim == 1) return {coordinate(flat), 0.0};
  return {coordinate(flat / points), coordinate(flat % points)};
}

GridSpec make_grid(int dim, double extent, std::size_t points) {
  if (dim != 1 && dim != 2) throw PreconditionError("grid dimension must be 1 or 2");
  if (!(extent > 0.0) || !std::isfinite(extent))
    throw PreconditionError("grid extent must be positive");
  if (points < 8 || (points & (points - 1)) != 0)
    throw PreconditionError("grid points must be a power of two >= 8");
  return GridSpec{dim, extent, points};
}

ComplexField::ComplexField(const GridSpec& g, std::vector<cplx> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw PreconditionError("field size does not match grid");
}

bool ComplexField::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw PreconditionError("fields live on different grids");
}

ComplexField& ComplexField::operator+=(const ComplexField& o) {
  require_same_grid(grid, o.grid);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}

ComplexField& ComplexField::operator-=(const ComplexField& o) {
  require_same_grid(grid, o.grid);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
  return *this;
}

ComplexField& ComplexField::operator*=(cplx s) {
  for (auto& v : values) v *= s;
  return *this;
}

ComplexField operator+(ComplexField a, const ComplexField& b) { return a += b; }
ComplexField operator-(ComplexField a, const ComplexField& b) { return a -= b; }
ComplexField operator*(cplx s, ComplexField a) { return a *= s; }

ComplexField conj(ComplexField f) {
  for (auto& v : f.values) v = std::conj(v);
  return f;
}

// --- spectral calculus ------------------------------------------------------

namespace {

struct AxisWavenumbers {
  std::vector<double> k;        // full, Nyquist included
  std::vector<double> k_odd;    // Nyquist zeroed (first derivatives)
};

AxisWavenumbers axis_wavenumbers(const GridSpec& g) {
  AxisWavenumbers w{g.wavenumbers(), {}};
  w.k_odd = w.k;
  w.k_odd[g.points / 2] = 0.0;
  return w;
}

ComplexField spectrum(const ComplexField& f) {
  ComplexField out(f.grid);
  fft_forward(f.grid, f.values, out.values);
  return out;
}

ComplexField from_spectrum(const ComplexField& fhat) {
  ComplexField out(fhat.grid);
  fft_backward(fhat.grid, fhat.values, out.values);
  return out;
}

// Calls fn(flat, kx, ky, kx_odd, ky_odd) for every mode.
template <class F>
void for_each_mode(const GridSpec& g, F&& fn) {
  const auto w = axis_wavenumbers(g);
  const std::size_t n = g.points;
  if (g.dim == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, w.k[i], 0.0, w.k_odd[i], 0.0);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) fn(i * n + j, w.k[i], w.k[j], w.k_odd[i], w.k_odd[j]);
  }
}

}  // namespace

SpectralDerivatives spectral_derivatives(const ComplexField& f) {
  const ComplexField fhat = spectrum(f);
  const GridSpec& g = f.grid;
  SpectralDerivatives out;
  std::vector<ComplexField> grad_hat(static_cast<std::size_t>(g.dim), ComplexField(g));
  ComplexField lap_hat(g);
  const cplx I(0.0, 1.0);
  for_each_mode(g, [&](std::size_t m, double kx, double ky, double kxo, double kyo) {
    grad_hat[0][m] = I * kxo * fhat[m];
    if (g.dim == 2) grad_hat[1][m] = I * kyo * fhat[m];
    lap_hat[m] = -(kx * kx + ky * ky) * fhat[m];
  });
  for (auto& gh : grad_hat) out.gradient.push_back(from_spectrum(gh));
  out.laplacian = from_spectrum(lap_hat);
  return out;
}

std::vector<ComplexField> gradient(const ComplexField& f) {
  const ComplexField fhat = spectrum(f);
  const GridSpec& g = f.grid;
  std::vector<ComplexField> grad_hat(static_cast<std::size_t>(g.dim), ComplexField(g));
  const cplx I(0.0, 1.0);
  for_each_mode(g, [&](std::size_t m, double, double, double kxo, double kyo) {
    grad_hat[0][m] = I * kxo * fhat[m];
    if (g.dim == 2) grad_hat[1][m] = I * kyo * fhat[m];
  });
  std::vector<ComplexField> out;
  for (auto& gh : grad_hat) out.push_back(from_spectrum(gh));
  return out;
}

ComplexField laplacian(const ComplexField& f) {
  ComplexField fhat = spectrum(f);
  for_each_mode(f.grid, [&](std::size_t m, double kx, double ky, double, double) {
    fhat[m] *= -(kx * kx + ky * ky);
  });
  return from_spectrum(fhat);
}

// --- quadrature ---------------------------------------------------------------

double l2_norm_sq(const ComplexField& f) {
  double s = 0.0;
  for (const auto& v : f.values) s += std::norm(v);
  return s * f.grid.cell_volume();
}

double lp_integral(const ComplexField& f, double p) {
  double s = 0.0;
  for (const auto& v : f.values) s += std::pow(std::abs(v), p);
  return s * f.grid.cell_volume();
}

double gradient_norm_sq(const ComplexField& f) {
  const ComplexField fhat = spectrum(f);
  double s = 0.0;
  for_each_mode(f.grid, [&](std::size_t m, double, double, double kxo, double kyo) {
    s += (kxo * kxo + kyo * kyo) * std::norm(fhat[m]);
  });
  return s * f.grid.cell_volume() / static_cast<double>(f.grid.size());
}

double weighted_norm_sq(const ComplexField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec2 x = f.grid.point(i);
    s += (x[0] * x[0] + x[1] * x[1]) * std::norm(f[i]);
  }
  return s * f.grid.cell_volume();
}

double hamiltonian(const ComplexField& v) {
  const int d = v.grid.dim;
  return 0.5 * gradient_norm_sq(v) - d / (2.0 * d + 4.0) * lp_integral(v, 2.0 + 4.0 / d);
}

cplx l2_inner(const ComplexField& f, const ComplexField& g) {
  require_same_grid(f.grid, g.grid);
  cplx s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::conj(f[i]) * g[i];
  return s * f.grid.cell_volume();
}

NormSuite norm_suite(const ComplexField& f) {
  NormSuite n;
  const double p = 2.0 + 4.0 / f.grid.dim;
  const double l2sq = l2_norm_sq(f);
  const double gsq = gradient_norm_sq(f);
  const double wsq = weighted_norm_sq(f);
  n.l2 = std::sqrt(l2sq);
  n.lp = std::pow(lp_integral(f, p), 1.0 / p);
  n.gradient = std::sqrt(gsq);
  n.h1 = std::sqrt(l2sq + gsq);
  n.weighted = std::sqrt(wsq);
  n.sigma = std::sqrt(l2sq + gsq + wsq);
  return n;
}

// --- resampling ---------------------------------------------------------------

namespace {

// Evaluates the trigonometric interpolant with DFT coefficients `coef`
// (already divided by N) at physical positions `pos`. Positions outside
// [-L/2, L/2) give zero.
void interpolate_line(std::span<const cplx> coef, double extent, std::span<const double> pos,
                      std::span<cplx> out) {
  const std::size_t n = coef.size();
  const std::size_t half = n / 2;
  for (std::size_t q = 0; q < pos.size(); ++q) {
    const double y = pos[q];
    if (y < -0.5 * extent || y >= 0.5 * extent) {
      out[q] = 0.0;
      continue;
    }
    const double theta = 2.0 * std::numbers::pi * (y + 0.5 * extent) / extent;
    const cplx z = std::polar(1.0, theta);
    cplx zk = 1.0;
    cplx acc = coef[0];
    for (std::size_t k = 1; k < half; ++k) {
      zk = (k % 64 == 0) ? std::polar(1.0, theta * static_cast<double>(k)) : zk * z;
      acc += coef[k] * zk + coef[n - k] * std::conj(zk);
    }
    acc += coef[half] * std::cos(theta * static_cast<double>(half));
    out[q] = acc;
  }
}

}  // namespace

ComplexField sample_affine(const ComplexField& f, double scale, const Vec2& shift) {
  const GridSpec& g = f.grid;
  const std::size_t n = g.points;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> pos0(n), pos1(n);
  for (std::size_t j = 0; j < n; ++j) {
    pos0[j] = scale * g.coordinate(j) + shift[0];
    pos1[j] = scale * g.coordinate(j) + shift[1];
  }
  // 1D plan reused per line; a 1D grid with the same N/L.
  const GridSpec line{1, g.extent, n};
  std::vector<cplx> buf(n), coef(n), res(n);
  if (g.dim == 1) {
    fft_forward(line, f.values, coef);
    for (auto& c : coef) c *= inv_n;
    ComplexField out(g);
    interpolate_line(coef, g.extent, pos0, out.values);
    return out;
  }
  // Pass 1: along axis 1 for every row.
  std::vector<cplx> tmp(g.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(f.values.begin() + static_cast<long>(i * n), n, buf.begin());
    fft_forward(line, buf, coef);
    for (auto& c : coef) c *= inv_n;
    interpolate_line(coef, g.extent, pos1, res);
    std::copy(res.begin(), res.end(), tmp.begin() + static_cast<long>(i * n));
  }
  // Pass 2: along axis 0 for every column.
  ComplexField out(g);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = tmp[i * n + j];
    fft_forward(line, buf, coef);
    for (auto& c : coef) c *= inv_n;
    interpolate_line(coef, g.extent, pos0, res);
    for (std::size_t i = 0; i < n; ++i) out[i * n + j] = res[i];
  }
  return out;
}

double mass_outside_box(const ComplexField& f, double half_width) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec2 x = f.grid.point(i);
    if (std::max(std::abs(x[0]), std::abs(x[1])) > half_width) s += std::norm(f[i]);
  }
  return s * f.grid.cell_volume();
}

// --- snapshot files -----------------------------------------------------------

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshot(std::ostream& os, const ComplexField& f, double t) {
  os << f.grid.dim << ',' << f.grid.points << ',' << format_double(f.grid.extent) << ','
     << format_double(t) << '\n';
  for (const auto& v : f.values) os << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
}

void write_snapshot_file(const std::string& path, const ComplexField& f, double t) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open snapshot file for writing: " + path);
  write_snapshot(os, f, t);
}

Snapshot read_snapshot(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("empty snapshot stream");
  std::replace(line.begin(), line.end(), ',', ' ');
  std::istringstream header(line);
  int d = 0;
  std::size_t n = 0;
  double extent = 0.0, t = 0.0;
  if (!(header >> d >> n >> extent >> t)) throw Error("malformed snapshot header");
  Snapshot snap{ComplexField(make_grid(d, extent, n)), t};
  for (std::size_t i = 0; i < snap.field.size(); ++i) {
    if (!std::getline(is, line)) throw Error("snapshot truncated");
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("malformed snapshot line");
    snap.field[i] = cplx(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return snap;
}

Snapshot read_snapshot_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open snapshot file: " + path);
  return read_snapshot(is);
}

}  // namespace nlslab
