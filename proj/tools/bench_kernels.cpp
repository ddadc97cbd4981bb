// Serial-vs-OpenMP timing of the data-parallel kernels: interface flux
// sweeps, per-cell wave-speed caches, Monte Carlo batches, tensor builds.

#include <chrono>
#include <cstdio>

#include "sgflow/experiments.hpp"
#include "sgflow/pressure.hpp"

using namespace sgflow;
using Clock = std::chrono::steady_clock;
using galerkin::Vector;

namespace {

double time_of(const std::function<void()>& fn, int repeats = 3) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double openmp) {
  std::printf("%-28s serial %8.3f ms   openmp %8.3f ms   speedup %.2fx\n", name,
              1e3 * serial, 1e3 * openmp, serial / openmp);
}

}  // namespace

int main() {
  std::printf("kernel benchmark, %d hardware threads\n\n", hardware_threads());

  // --- tensor build ---
  mw::MwBasisSpec spec;
  spec.dims = 1;
  spec.poly_degree = 2;
  spec.resolution_levels = 4;  // P = 48
  const auto basis = mw::MwBasis::build(spec);
  const auto rule = mw::build_quadrature(basis);
  report("tensor build (P=48)",
         time_of([&] { (void)galerkin::ProductTensors::build(basis, rule, 1e-14,
                                                             std::int64_t{1} << 26,
                                                             ExecMode::serial); }),
         time_of([&] { (void)galerkin::ProductTensors::build(basis, rule, 1e-14,
                                                             std::int64_t{1} << 26,
                                                             ExecMode::openmp); }));

  const auto tensors = galerkin::ProductTensors::build(basis, rule);

  // --- flux sweep on a developed 1D Riemann state ---
  fv::Grid g;
  g.mx = 300;
  g.x0 = -0.05;
  g.dx = 0.15 / 300;
  const Vector u = pressure::project_scalar(
      [](const Vector& eta) { return 1.0 + 0.2 * eta[0]; }, basis, rule);
  const auto vel = fv::MwVelocityField::uniform(g, u, Vector());
  fv::BoundarySpec bcs;
  bcs.left = {fv::BcKind::dirichlet, transport::unit_vector(basis.size()), 0, 0, {}, 0};
  bcs.right = {fv::BcKind::dirichlet, Vector::Zero(basis.size()), 0, 0, {}, 0};
  transport::FluxParams fp;

  auto run_steps = [&](ExecMode mode) {
    fv::EngineConfig ec;
    ec.exec = mode;
    ec.dt_max = ec.cfl_1d * g.dx / (1.2 * transport::max_frac_flow_deriv(2.0));
    fv::Engine eng(g, bcs, vel, fp, tensors, ec);
    fv::SgField f;
    f.S.assign(g.cells(), Vector::Zero(basis.size()));
    for (int i = 0; i < g.mx; ++i)
      if (g.xc(i) <= 0.0) f.S[i] = transport::unit_vector(basis.size());
    eng.advance_to(f, 0.0, 0.004);
    return f;
  };
  report("flux sweep (P=48, 300 cells)", time_of([&] { (void)run_steps(ExecMode::serial); }, 1),
         time_of([&] { (void)run_steps(ExecMode::openmp); }, 1));

  // serial is the reference: results must agree bitwise
  const auto fs = run_steps(ExecMode::serial);
  const auto fo = run_steps(ExecMode::openmp);
  double dev = 0.0;
  for (int c = 0; c < g.cells(); ++c)
    dev = std::max(dev, (fs.S[c] - fo.S[c]).cwiseAbs().maxCoeff());
  std::printf("%-28s max |serial - openmp| = %g\n", "flux sweep check", dev);

  // --- Monte Carlo batch ---
  const auto xim = kl::XiMap::make(kl::XiKind::uniform);
  auto runner = [&](const Vector& xi) {
    mc::ScalarProblem sp;
    sp.grid = g;
    sp.face_ux.assign(g.mx + 1, 1.0 + 0.2 * xi[0]);
    sp.left = fv::BcKind::dirichlet;
    sp.left_value = 1.0;
    sp.right = fv::BcKind::dirichlet;
    sp.right_value = 0.0;
    sp.dt_max = 0.45 * g.dx / (1.2 * transport::max_frac_flow_deriv(2.0));
    std::vector<double> S0(g.cells(), 0.0);
    for (int i = 0; i < g.mx; ++i)
      if (g.xc(i) <= 0.0) S0[i] = 1.0;
    return mc::scalar_solve_snapshots(sp, std::move(S0), {0.01});
  };
  report("monte carlo (256 samples)",
         time_of([&] { (void)mc::run_monte_carlo(256, 1, 1, xim, runner, g.cells(), 1,
                                                 ExecMode::serial); },
                 1),
         time_of([&] { (void)mc::run_monte_carlo(256, 1, 1, xim, runner, g.cells(), 1,
                                                 ExecMode::openmp); },
                 1));
  return 0;
}
