#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nlslab/grid.hpp"

namespace nlslab {

inline double critical_exponent(int dim) { return 1.0 + 4.0 / dim; }

/// Ground state Q of  Delta Q - Q + Q^p = 0  sampled on a grid, centered in the box.
struct GroundState {
  ComplexField field;  // real, positive
  int dim = 1;
  double p = 5.0;
  double residual = 0.0;  // ||Delta Q - Q + Q^p||_{L^2}
  double mass = 0.0;      // ||Q||_{L^2}^2
  int iterations = 0;
};

/// Radial profile table produced by shooting from r = 0.
struct RadialTable {
  int dim = 1;
  double p = 5.0;
  double q0 = 0.0;   // Q(0)
  double dr = 0.0;   // table spacing
  std::vector<double> q;  // Q(j*dr), j = 0..q.size()-1
  double r_cut = 0.0;     // last trusted radius; beyond it the linear tail is used
  double mass = 0.0;      // integral of Q^2 over R^d
};

/// Off-grid evaluator r -> Q(r). Closed form in 1D, quintic spline of the shooting
/// table in 2D.
class RadialProfile {
 public:
  static RadialProfile closed_form_1d(double p);
  static RadialProfile from_table(const RadialTable& table);
  /// Closed form when d = 1, shooting table otherwise.
  static RadialProfile for_dimension(int dim, double p);

  double operator()(double r) const;
  int dim() const { return dim_; }
  double exponent() const { return p_; }

 private:
  int dim_ = 1;
  double p_ = 5.0;
  bool closed_ = true;
  std::function<double(double)> spline_;
  double r_cut_ = 0.0;
  double q_cut_ = 0.0;
};

/// Q(x) = ((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1) x / 2), p in (1, 5].
GroundState q_closed_form_1d(double p, const GridSpec& grid);

struct GroundStateOptions {
  double tau = 0.1;
  int max_iterations = 50000;
  std::optional<ComplexField> initial;
};

/// Semi-implicit imaginary-time flow for  u_t = Delta u - u + |u|^{p-1} u,
/// rescaled after every step onto the Nehari set
/// ||u||_{H^1}^2 = ||u||_{p+1}^{p+1}, iterated until the elliptic residual < tol.
GroundState solve_ground_state(const GridSpec& grid, double p, double tol,
                               const GroundStateOptions& options = {});

/// Shooting + bisection on Q(0) for  Q'' + (d-1)/r Q' - Q + Q^p = 0.
RadialTable radial_shooting_oracle(int dim, double p, double tol = 1e-13);

/// ||Q||_{L^2}^2 and ||grad Q||_{L^2}^2 on R^d, from a cached shooting solve.
double ground_state_mass(int dim, double p);
double ground_state_gradient_sq(int dim, double p);

/// ||Delta f - f + |f|^{p-1} f||_{L^2} with a spectral Laplacian.
double elliptic_residual(const ComplexField& f, double p);

struct VariationalIdentities {
  double hamiltonian = 0.0;
  double gradient_sq = 0.0;            // ||grad Q||^2
  double pohozaev_gap = 0.0;           // ||grad Q||^2 - d/(d+2) ||Q||_{2+4/d}^{2+4/d}
  double pohozaev_gap_relative = 0.0;  // gap / ||grad Q||^2
  double gn_ratio = 0.0;               // sharpness ratio evaluated at Q itself
};

VariationalIdentities variational_identities(const GroundState& q);

/// ||v||_{2+4/d}^{2+4/d} / [ (1+2/d) (||v|| / ||Q||)^{4/d} ||grad v||^2 ]  (<= 1).
double gn_ratio(const ComplexField& v, double q_mass);

}  // namespace nlslab
