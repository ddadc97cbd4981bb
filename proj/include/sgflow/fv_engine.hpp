#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sgflow/parallel.hpp"
#include "sgflow/transport.hpp"

namespace sgflow::fv {

using galerkin::OpCounters;
using galerkin::ProductTensors;
using galerkin::Vector;
using transport::FluxParams;

struct Grid {
  int mx = 1, my = 1;
  double x0 = 0.0, y0 = 0.0;
  double dx = 1.0, dy = 1.0;
  Vector porosity;  // per cell; empty means 1 everywhere

  bool is1d() const { return my == 1; }
  int cells() const { return mx * my; }
  int cell(int i, int j) const { return i + mx * j; }
  double xc(int i) const { return x0 + (i + 0.5) * dx; }
  double yc(int j) const { return y0 + (j + 0.5) * dy; }
  double phi(int c) const { return porosity.size() ? porosity[c] : 1.0; }
  double cell_volume() const { return is1d() ? dx : dx * dy; }
};

/// MW velocity coefficients on cell faces. x-faces are indexed
/// i + (mx+1) j for i = 0..mx; y-faces i + mx j for j = 0..my.
struct MwVelocityField {
  std::vector<Vector> ux, uy;

  static MwVelocityField uniform(const Grid& g, const Vector& ux0, const Vector& uy0);
  /// face values as arithmetic averages of the adjacent cell coefficients
  static MwVelocityField from_cell_centered(const Grid& g, const std::vector<Vector>& cx,
                                            const std::vector<Vector>& cy);
  /// max over cells and modes of the discrete divergence of the face fluxes
  double max_divergence(const Grid& g) const;
  double max_mode0_speed(const Grid& g) const;
};

enum class BcKind { dirichlet, no_flow, outflow, penalty_injection };

struct BoundarySide {
  BcKind kind = BcKind::outflow;
  Vector value;                            ///< dirichlet state
  double range_lo = 0.0, range_hi = 1.0;   ///< penalty extent along the side
  Vector injected;                         ///< penalty target state
  double strength = 10.0;                  ///< dimensionless penalty factor
};

struct BoundarySpec {
  BoundarySide left, right, bottom, top;
};

/// Point source/sink: rate > 0 injects water (inflow fractional flow 1),
/// rate < 0 produces at the cell's own fractional flow.
struct Well {
  int i = 0, j = 0;
  double rate = 0.0;
};

struct SgField {
  std::vector<Vector> S;  // one MW vector per cell
};

struct EngineConfig {
  double cfl_1d = 0.45;
  double cfl_2d = 0.25;
  double dt_max = std::numeric_limits<double>::infinity();
  bool use_limiter = true;
  ExecMode exec = ExecMode::openmp;
};

struct StepReport {
  double mass_change = 0.0;    ///< interior mode-0 mass difference
  double boundary_flux = 0.0;  ///< time-integrated boundary + source mode-0 inflow
  double dt = 0.0;
};

/// Componentwise minmod reconstruction: returns the (left-face, right-face)
/// values of the centre cell.
std::pair<Vector, Vector> minmod_reconstruct(const Vector& left, const Vector& centre,
                                             const Vector& right);

/// Three-branch HLL blend given the flux evaluations at both states.
Vector hll_blend(const Vector& flux_left, const Vector& flux_right, const Vector& S_left,
                 const Vector& S_right, double sigma_left, double sigma_right);

/// (mean, std) per cell from the orthonormal expansion.
std::pair<std::vector<double>, std::vector<double>> field_statistics(const SgField& field);

class Engine {
 public:
  Engine(Grid grid, BoundarySpec bcs, MwVelocityField velocity, FluxParams flux,
         const ProductTensors& tensors, EngineConfig config = {},
         std::vector<Well> wells = {});

  const Grid& grid() const { return grid_; }
  OpCounters& counters() { return counters_; }

  double stable_dt(const SgField& field) const;

  /// One SSP-RK2 step. Throws HyperbolicityRiskError (recoverable) or
  /// std::runtime_error on non-finite states.
  StepReport step(SgField& field, double dt);

  /// Advance to t_target with automatic dt; on a hyperbolicity-risk error
  /// the offending step is retried once with dt/2. Returns the summed
  /// conservation report.
  StepReport advance_to(SgField& field, double t_now, double t_target);

  /// Binary coefficient dump (row = cell, little-endian doubles) plus a
  /// JSON sidecar describing the shape.
  void save_coefficients(const SgField& field, const std::string& path) const;

 private:
  Grid grid_;
  BoundarySpec bcs_;
  MwVelocityField vel_;
  FluxParams flux_;
  const ProductTensors& tensors_;
  EngineConfig cfg_;
  std::vector<Well> wells_;
  OpCounters counters_;
  int P_;

  struct Stage {
    std::vector<Vector> rate;  // dS/dt per cell
    double boundary_rate = 0.0;
  };
  Stage compute_stage(const std::vector<Vector>& S);
  void check_finite(const std::vector<Vector>& S, const char* where) const;
  Vector ghost_state(const BoundarySide& side, const Vector& interior) const;
  std::pair<double, double> cell_wave_bounds(const Vector& S, const Vector& u_cell) const;
};

}  // namespace sgflow::fv
