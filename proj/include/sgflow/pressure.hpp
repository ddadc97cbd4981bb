#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "sgflow/fv_engine.hpp"
#include "sgflow/random_fields.hpp"

namespace sgflow::pressure {

using fv::Grid;
using fv::MwVelocityField;
using galerkin::Vector;

/// Incompressible single-phase pressure problem: no-flow on every side,
/// cell-indexed sources that sum to zero, mobility = permeability.
struct PressureProblem {
  int mx = 1, my = 1;
  double dx = 1.0, dy = 1.0;
  std::vector<double> perm;                      // per cell, > 0
  std::vector<std::pair<int, double>> sources;   // (cell, volumetric rate)
};

struct PressureSolution {
  std::vector<double> p;       // per cell, gauge p[cell 0] = 0
  std::vector<double> face_ux; // (mx+1)*my face velocities
  std::vector<double> face_uy; // mx*(my+1)
  double residual_inf = 0.0;   // ||A p - b||_inf / ||b||_inf
  double max_divergence = 0.0; // away from source cells
};

/// Two-point flux finite volumes with harmonic-mean face transmissibility;
/// diagonally preconditioned CG with the gauge cell eliminated.
PressureSolution solve_pressure(const PressureProblem& problem);

/// One velocity realization on the faces of `grid`.
using VelocitySampler =
    std::function<std::pair<std::vector<double>, std::vector<double>>(const Vector& xi)>;

/// MW coefficients of the face velocities by quadrature over the basis
/// measure: coefficient_k = sum_q w_q psi_k(eta_q) u(x, ximap(eta_q)).
MwVelocityField project_velocity_mw(const VelocitySampler& sampler, const mw::MwBasis& basis,
                                    const mw::QuadratureRule& rule, const kl::XiMap& xi_map,
                                    const Grid& grid, ExecMode exec = ExecMode::openmp);

/// Line-injection inflow: u_x = u_mean + sum_k sqrt(lambda_k) g_k^x xi_k,
/// u_y the same without a mean, projected exactly through the per-dimension
/// moments of the xi map. The KL grid must match the transport grid cells.
MwVelocityField uniform_mean_inflow_field(double u_mean, const kl::KlExpansion& klx,
                                          const mw::MwBasis& basis, const Grid& grid);

/// Projection of a scalar function of eta onto the basis by quadrature.
Vector project_scalar(const std::function<double(const Vector&)>& fn, const mw::MwBasis& basis,
                      const mw::QuadratureRule& rule);

/// Largest |u| over all faces and quadrature realizations; feeds the
/// advective time-step cap of the transport engine.
double max_realized_speed(const MwVelocityField& vel, const mw::MwBasis& basis,
                          const mw::QuadratureRule& rule);

}  // namespace sgflow::pressure
