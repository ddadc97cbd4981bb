#pragma once

#include <utility>

#include "sgflow/galerkin.hpp"
#include "sgflow/reduced.hpp"

namespace sgflow::transport {

using galerkin::Matrix;
using galerkin::OpCounters;
using galerkin::ProductTensors;
using galerkin::Vector;

enum class FluxMode {
  quad,  ///< quadruple-tensor Galerkin flux (linear system per evaluation)
  trip   ///< successive pairwise pseudo-spectral products
};

struct FluxParams {
  double viscosity_ratio = 2.0;  ///< a = mu_w / mu_n
  FluxMode mode = FluxMode::quad;
  double epsilon = 0.0;  ///< local basis-reduction threshold; <= 0 disables
};

/// Deterministic fractional flow f(S) = S^2 / (S^2 + a (1-S)^2).
double frac_flow(double s, double a);
double frac_flow_deriv(double s, double a);

/// max of f' over [0,1] (golden-section on the unimodal derivative); the
/// scalar envelope behind advective time-step caps.
double max_frac_flow_deriv(double a);

/// Saturation at the leading shock of the Riemann problem with zero right
/// state (tangency f(S*)/S* = f'(S*)), and the shock speed factor f'(S*).
struct ShockInfo {
  double s_star;
  double speed_factor;
};
ShockInfo shock_saturation(double a);

/// e_0 coefficient vector (the deterministic unit in the MW basis).
Vector unit_vector(int P);

/// Galerkin flux coefficients of u * f(S) via the quadruple-tensor system
///   [B(S,S) + a B(1-S,1-S)] f = B(S,S) u.
/// Throws HyperbolicityRiskError when the denominator matrix is not SPD,
/// SingularSystemError when it is singular.
Vector sg_flux_quad(const Vector& S, const Vector& u, const FluxParams& p,
                    const ProductTensors& t, OpCounters* ops = nullptr);

/// Pairwise variant: solve A(S*S + a (1-S)*(1-S)) g = S*S for the
/// coefficients g of f(S), then return the pseudo-spectral product u * g.
Vector sg_flux_trip(const Vector& S, const Vector& u, const FluxParams& p,
                    const ProductTensors& t, OpCounters* ops = nullptr);

/// Dispatch on p.mode.
Vector sg_flux(const Vector& S, const Vector& u, const FluxParams& p, const ProductTensors& t,
               OpCounters* ops = nullptr);

/// MW coefficients of f(S) alone (unit velocity), used for production wells.
Vector sg_frac_flow_coeffs(const Vector& S, const FluxParams& p, const ProductTensors& t,
                           OpCounters* ops = nullptr);

/// Flux Jacobian d f / d S of the quadruple-tensor flux, assembled as the
/// product of the two symmetric factors from its closed-form derivative.
Matrix flux_jacobian(const Vector& S, const Vector& u, const FluxParams& p,
                     const ProductTensors& t);

/// Extreme wave speeds over the Jacobian spectra at both states, widened by
/// a 5% safety factor. Dense symmetric eigensolve for P <= 64; beyond that,
/// Gershgorin-based bounds on the symmetric factors.
std::pair<double, double> wave_speed_bounds(const Vector& S_left, const Vector& S_right,
                                            const Vector& u, const FluxParams& p,
                                            const ProductTensors& t);

struct HyperbolicityReport {
  double min_denominator_eig = 0.0;  ///< smallest eig of B(S,S)+aB(1-S,1-S)
  double max_imag_eig = 0.0;         ///< max |imag| over the flux Jacobian spectrum
  double max_asymmetry = 0.0;        ///< max |M - M^T| of the denominator
  bool spd = false;
};

/// Diagnostic: never throws on indefiniteness, reports it.
HyperbolicityReport hyperbolicity_check(const Vector& S, const FluxParams& p,
                                        const ProductTensors& t);
HyperbolicityReport hyperbolicity_check(const Vector& S, const Vector& u, const FluxParams& p,
                                        const ProductTensors& t);

}  // namespace sgflow::transport
