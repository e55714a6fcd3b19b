#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nlslab/evolution.hpp"
#include "nlslab/exact_solutions.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/ground_state.hpp"
#include "nlslab/noise.hpp"

namespace nlslab {

struct Functionals {
  double l2_norm = 0.0;      // M = ||v||_{L^2}
  double mass = 0.0;         // ||v||_{L^2}^2
  double hamiltonian = 0.0;  // 1/2 ||grad v||^2 - d/(2d+4) ||v||_{2+4/d}^{2+4/d}
  double grad_norm = 0.0;    // ||grad v||_{L^2}
  double sigma_norm = 0.0;   // (||v||_{H^1}^2 + ||x v||^2)^{1/2}
};

Functionals functionals(const ComplexField& v);

// --- Banica-type estimate ------------------------------------------------------

struct BanicaResult {
  double lhs = 0.0;  // |Im int v grad(conj v) . grad phi|
  double rhs = 0.0;  // (2 H(v) int |v grad phi|^2)^{1/2}
  bool satisfied = false;
};

/// Requires ||v||_{L^2} <= ||Q||_{L^2} + 1e-8 (q_mass = ||Q||^2; 0 selects the
/// critical ground state of the grid dimension).
BanicaResult banica_check(const ComplexField& v, std::span<const RealField> grad_phi,
                          double q_mass = 0.0);
BanicaResult banica_check(const ComplexField& v, const NoiseProfileSet& profiles,
                          double q_mass = 0.0);

// --- Hamiltonian evolution -------------------------------------------------------

struct HamiltonianEvolution {
  std::vector<double> t;
  std::vector<double> h;         // H(X(t))
  std::vector<double> h1;        // 1/2 sum_l int_0^t ||grad phi_l X||^2 ds  (trapezoid)
  std::vector<double> h2;        // -sum_l int_0^t Im int X grad(conj X).grad phi_l dB_l  (left point)
  std::vector<double> residual;  // H(X(t)) - H(X0) - H1 - H2
  double max_abs_residual = 0.0;
};

/// Evaluated on the snapshot times. Throws PreconditionError without a Brownian drive.
HamiltonianEvolution hamiltonian_evolution_residual(const Trajectory& traj,
                                                    const NoiseProfileSet& profiles);

// --- virial ------------------------------------------------------------------

/// theta(r) = r^2 S((r-1)/2), S the e^{-1/u} smoothstep from 1 to 0 on [0, 1];
/// theta_m(x) = m^2 theta(|x|/m). C is the smallest constant with |theta'|^2 <= C theta,
/// measured by a scan at construction.
struct CutoffSpec {
  double m = 1.0;
  double C = 0.0;

  static double theta(double r);
  static double theta_prime(double r);
};

CutoffSpec make_cutoff(double m);

/// int theta_m(x - center) |v|^2, or int |x - center|^2 |v|^2 without a cutoff.
double virial(const ComplexField& v, const Vec2& center, const std::optional<CutoffSpec>& cutoff);

struct VirialEvolution {
  std::vector<double> t;
  std::vector<double> direct;      // V(t)
  std::vector<double> integrated;  // V(t0) + int 2 Im int grad(theta) conj(X) . grad X ds  (trapezoid)
  std::vector<double> residual;
  double max_abs_residual = 0.0;
};

/// Evaluated on the snapshot times.
VirialEvolution virial_evolution_residual(const Trajectory& traj, const Vec2& center,
                                          const std::optional<CutoffSpec>& cutoff);

// --- localization and modulation ---------------------------------------------------

/// int over |x - center| <= R of |v|^2.
double localized_mass(const ComplexField& v, const Vec2& center, double R);

/// Grid argmax of |v| refined by a three-point quadratic fit on each axis.
Vec2 peak_center(const ComplexField& v);

/// True when some other local maximum of |v| exceeds half of the global maximum.
bool has_secondary_peak(const ComplexField& v);

struct ModulationFit {
  double lambda = 1.0;
  Vec2 center{0.0, 0.0};
  double gamma = 0.0;
  double residual_l2 = 0.0;  // ||eps||_{L^2}
  double residual_h1 = 0.0;  // ||eps||_{H^1}
  bool secondary_peak = false;
};

/// lambda = ||grad Q|| / ||grad v||, center = maximizer of |v| (Newton-refined on the
/// trigonometric interpolant), gamma = arg int v~ Q with v~(x) = lambda^{d/2} v(lambda x + y),
/// eps = v~ e^{-i gamma} - Q.
ModulationFit modulation_fit(const ComplexField& v, const RadialProfile& q);

/// lambda^{-d/2} Q((x - y)/lambda) e^{i gamma}.
ComplexField reconstruct(const ModulationFit& fit, const GridSpec& grid, const RadialProfile& q);

// --- blow-up rate ---------------------------------------------------------------------

struct RateFit {
  double T_est = 0.0;
  double alpha = 0.0;
  double log_C = 0.0;
  double ssr_power = 0.0;   // log-space residual of  g = C (T - t)^{-alpha}
  double ssr_loglog = 0.0;  // same with the factor (ln|ln(T - t)|)^{1/2}
  double loglog_score = 0.0;  // (ssr_power - ssr_loglog) / ssr_power
};

/// Least squares in log space, T profiled out by a scan plus Brent refinement.
/// Requires >= 20 samples and g_max / g_min >= 10.
RateFit blowup_rate_fit(std::span<const double> t, std::span<const double> g);

/// Rate fit over the accepted steps with ||grad X|| >= 2 ||grad X(t0)||, thinned to at
/// most 2000 samples. Empty when the window is too short or too flat.
std::optional<RateFit> trajectory_rate_fit(const Trajectory& traj);

// --- profile residuals ------------------------------------------------------------------

struct NormTriple {
  double l2 = 0.0;
  double h1 = 0.0;
  double sigma = 0.0;
};

struct ProfileResidual {
  NormTriple global;
  std::vector<NormTriple> per_profile;  // on balls of radius half the minimum separation
};

/// v - sum_k S_k(t) - z.
ProfileResidual profile_residuals(const ComplexField& v, double t, const BlowupParams& params,
                                  const RadialProfile& q,
                                  const std::optional<ComplexField>& z = std::nullopt);
/// v - sum_k R_k(t) - z.
ProfileResidual profile_residuals(const ComplexField& v, double t, const SolitonParams& params,
                                  const RadialProfile& q,
                                  const std::optional<ComplexField>& z = std::nullopt);

}  // namespace nlslab
