#include "sgflow/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sgflow/pressure.hpp"

namespace sgflow::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using galerkin::ProductTensors;
using galerkin::Vector;
using transport::FluxParams;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ExecMode exec_mode(const IniConfig& cfg) {
  return cfg.get("engine.threads", std::string("openmp")) == "serial" ? ExecMode::serial
                                                                      : ExecMode::openmp;
}

mw::MwBasisSpec basis_spec(const IniConfig& cfg, int dims, int poly, int levels, int order) {
  mw::MwBasisSpec s;
  s.dims = cfg.get("basis.dims", dims);
  s.poly_degree = cfg.get("basis.poly_degree", poly);
  s.resolution_levels = cfg.get("basis.resolution_levels", levels);
  s.total_order = cfg.get("basis.total_order", order);
  s.size_cap = cfg.get("basis.size_cap", 1024);
  return s;
}

FluxParams flux_params(const IniConfig& cfg) {
  FluxParams p;
  p.viscosity_ratio = cfg.get("flux.viscosity_ratio", 2.0);
  p.mode = parse_flux_mode(cfg.get("flux.mode", std::string("quad")));
  p.epsilon = cfg.get("flux.epsilon", 1e-10);
  return p;
}

// advective time-step cap from the scalar envelope u_max * max f'; used
// whenever the spectral wave speeds vanish (constant states)
double envelope_dt_cap(const fv::Grid& g, double umax, double a, const fv::EngineConfig& ec) {
  const double fpmax = transport::max_frac_flow_deriv(a);
  const double speed = std::max(umax * fpmax, 1e-300);
  return g.is1d() ? ec.cfl_1d * g.dx / speed
                  : ec.cfl_2d * std::min(g.dx, g.dy) / (2.0 * speed);
}

fv::EngineConfig engine_config(const IniConfig& cfg) {
  fv::EngineConfig e;
  e.cfl_1d = cfg.get("engine.cfl_1d", 0.45);
  e.cfl_2d = cfg.get("engine.cfl_2d", 0.25);
  e.use_limiter = cfg.get("engine.limiter", true);
  e.exec = exec_mode(cfg);
  const double dtm = cfg.get("engine.dt_max", 0.0);
  if (dtm > 0.0) e.dt_max = dtm;
  return e;
}

void write_field_csv(const std::string& path, const fv::Grid& g,
                     const std::vector<double>& values, const char* column) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  char buf[96];
  if (g.is1d()) {
    os << "x," << column << '\n';
    for (int i = 0; i < g.mx; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", g.xc(i), values[i]);
      os << buf;
    }
  } else {
    os << "x,y," << column << '\n';
    for (int j = 0; j < g.my; ++j)
      for (int i = 0; i < g.mx; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.xc(i), g.yc(j),
                      values[g.cell(i, j)]);
        os << buf;
      }
  }
}

struct OutputWriter {
  const RunOptions& opt;
  std::vector<std::string> files;

  void field(const std::string& stem, const fv::Grid& g, const std::vector<double>& v,
             const char* column) {
    if (opt.out_dir.empty()) return;
    fs::create_directories(opt.out_dir);
    const std::string path = opt.out_dir + "/" + stem + ".csv";
    write_field_csv(path, g, v, column);
    files.push_back(path);
  }
  void json_file(const std::string& name, const nlohmann::json& j) {
    if (opt.out_dir.empty()) return;
    fs::create_directories(opt.out_dir);
    const std::string path = opt.out_dir + "/" + name;
    std::ofstream os(path);
    os << j.dump(2) << '\n';
    files.push_back(path);
  }
  void text_file(const std::string& name, const std::string& body) {
    if (opt.out_dir.empty()) return;
    fs::create_directories(opt.out_dir);
    const std::string path = opt.out_dir + "/" + name;
    std::ofstream os(path);
    os << body;
    files.push_back(path);
  }
};

nlohmann::json config_echo(const IniConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : cfg.values()) j[k] = v;
  return j;
}

nlohmann::json tensor_stats_json(const ProductTensors& t) {
  return {{"P", t.size()},
          {"triple_nnz", t.stats().triple_nnz},
          {"quad_nnz", t.stats().quad_nnz},
          {"quad_available", t.stats().quad_available},
          {"build_seconds", t.stats().build_seconds}};
}

nlohmann::json snapshots_json(const std::vector<FieldSnapshot>& snaps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : snaps) arr.push_back(s.time);
  return arr;
}

// common MW-run loop: advance through snapshot times, recording statistics
// and the per-step conservation defect
struct MwRun {
  std::vector<FieldSnapshot> snaps;
  double max_conservation_defect = 0.0;
  double wall_seconds = 0.0;
};

MwRun advance_with_snapshots(fv::Engine& engine, fv::SgField& field,
                             const std::vector<double>& times) {
  const auto t0 = Clock::now();
  MwRun run;
  double t = 0.0;
  for (double target : times) {
    const auto rep = engine.advance_to(field, t, target);
    run.max_conservation_defect =
        std::max(run.max_conservation_defect,
                 std::abs(rep.mass_change - rep.boundary_flux));
    t = target;
    auto [mean, sd] = fv::field_statistics(field);
    run.snaps.push_back({target, std::move(mean), std::move(sd)});
  }
  run.wall_seconds = seconds_since(t0);
  return run;
}

}  // namespace

std::vector<double> detect_jumps(const std::vector<double>& mean, const fv::Grid& grid,
                                 double jump_tol) {
  std::vector<double> out;
  for (int i = 0; i + 1 < grid.mx; ++i)
    if (std::abs(mean[i + 1] - mean[i]) > jump_tol)
      out.push_back(grid.x0 + (i + 1) * grid.dx);
  return out;
}

kl::XiKind parse_xi_kind(const std::string& name) {
  if (name == "uniform") return kl::XiKind::uniform;
  if (name == "truncated-gaussian" || name == "truncated_gaussian")
    return kl::XiKind::truncated_gaussian;
  throw std::invalid_argument("unknown xi distribution: " + name);
}

transport::FluxMode parse_flux_mode(const std::string& name) {
  if (name == "quad") return transport::FluxMode::quad;
  if (name == "trip") return transport::FluxMode::trip;
  throw std::invalid_argument("unknown flux mode: " + name + " (expected quad or trip)");
}

std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

// ---------------------------------------------------------------------------
// 1D Riemann problem with uniformly distributed spatially constant velocity
// ---------------------------------------------------------------------------

ExperimentResult run_riemann1d(const RunOptions& opt) {
  const IniConfig& cfg = opt.config;
  ExperimentResult res;
  OutputWriter out{opt, {}};

  const auto spec = basis_spec(cfg, 1, 0, 4, 0);  // Haar P=16 default
  const auto basis = mw::MwBasis::build(spec);
  const auto rule = mw::build_quadrature(basis);
  const auto tensors = ProductTensors::build(basis, rule, 1e-14,
                                             std::int64_t(cfg.get("tensors.quad_nnz_cap", 1 << 26)),
                                             exec_mode(cfg));
  const FluxParams fpar = flux_params(cfg);

  fv::Grid g;
  g.mx = cfg.get("grid.mx", 300);
  g.x0 = cfg.get("grid.x0", -0.05);
  const double x1 = cfg.get("grid.x1", 0.10);
  g.dx = (x1 - g.x0) / g.mx;
  res.grid = g;

  const double u_min = cfg.get("velocity.u_min", 0.8);
  const double u_max = cfg.get("velocity.u_max", 1.2);
  const Vector u_coeffs = pressure::project_scalar(
      [&](const Vector& eta) {
        return 0.5 * (u_max + u_min) + 0.5 * (u_max - u_min) * eta[0];
      },
      basis, rule);
  const auto velocity = fv::MwVelocityField::uniform(g, u_coeffs, Vector());

  fv::BoundarySpec bcs;
  bcs.left = {fv::BcKind::dirichlet, transport::unit_vector(basis.size()), 0, 0, {}, 0};
  bcs.right = {fv::BcKind::dirichlet, Vector::Zero(basis.size()), 0, 0, {}, 0};

  fv::EngineConfig ec = engine_config(cfg);
  if (!std::isfinite(ec.dt_max))
    ec.dt_max = envelope_dt_cap(g, pressure::max_realized_speed(velocity, basis, rule),
                                fpar.viscosity_ratio, ec);
  fv::Engine engine(g, bcs, velocity, fpar, tensors, ec);
  fv::SgField field;
  field.S.assign(g.cells(), Vector::Zero(basis.size()));
  for (int i = 0; i < g.mx; ++i)
    if (g.xc(i) <= 0.0) field.S[i] = transport::unit_vector(basis.size());

  const auto times = cfg.get_list("run.snapshots", {cfg.get("run.end_time", 0.025)});
  auto mwrun = advance_with_snapshots(engine, field, times);
  res.mw = mwrun.snaps;
  res.final_state = field;

  // shock-band diagnostic on every snapshot
  const auto shock = transport::shock_saturation(fpar.viscosity_ratio);
  nlohmann::json band_json = nlohmann::json::array();
  for (const auto& snap : res.mw) {
    const double lo = u_min * shock.speed_factor * snap.time;
    const double hi = u_max * shock.speed_factor * snap.time;
    auto jumps = detect_jumps(snap.mean, g, cfg.get("run.jump_tol", 0.01));
    bool inside = true;
    for (double x : jumps) inside = inside && (x >= lo - g.dx && x <= hi + g.dx);
    band_json.push_back({{"time", snap.time},
                         {"band", {lo, hi}},
                         {"jumps", jumps},
                         {"all_inside_band", inside}});
  }

  // Monte Carlo reference with the deterministic solver
  const int nmc = cfg.get("run.mc_samples", opt.paper_scale ? 10000 : 2000);
  const auto seed = std::uint64_t(cfg.get("run.seed", 2024));
  const auto t0 = Clock::now();
  const auto xim = kl::XiMap::make(kl::XiKind::uniform);
  auto mcres = mc::run_monte_carlo(
      nmc, seed, 1, xim,
      [&](const Vector& xi) {
        mc::ScalarProblem sp;
        sp.grid = g;
        sp.viscosity_ratio = fpar.viscosity_ratio;
        const double u = 0.5 * (u_max + u_min) + 0.5 * (u_max - u_min) * xi[0];
        sp.face_ux.assign(g.mx + 1, u);
        sp.left = fv::BcKind::dirichlet;
        sp.left_value = 1.0;
        sp.right = fv::BcKind::dirichlet;
        sp.right_value = 0.0;
        sp.cfl_1d = cfg.get("engine.cfl_1d", 0.45);
        sp.use_limiter = cfg.get("engine.limiter", true);
        sp.dt_max = sp.cfl_1d * g.dx /
                    std::max(u * transport::max_frac_flow_deriv(sp.viscosity_ratio), 1e-300);
        std::vector<double> S0(g.cells(), 0.0);
        for (int i = 0; i < g.mx; ++i)
          if (g.xc(i) <= 0.0) S0[i] = 1.0;
        return mc::scalar_solve_snapshots(sp, std::move(S0), times);
      },
      g.cells(), static_cast<int>(times.size()), exec_mode(cfg));
  const double mc_seconds = seconds_since(t0);
  for (std::size_t s = 0; s < times.size(); ++s)
    res.mc.push_back({times[s], mcres.mean[s], mcres.sd[s]});

  for (const auto& snap : res.mw) {
    out.field("mean_t" + format_time(snap.time), g, snap.mean, "mean");
    out.field("std_t" + format_time(snap.time), g, snap.sd, "std");
  }
  for (const auto& snap : res.mc) {
    out.field("mean_mc_t" + format_time(snap.time), g, snap.mean, "mean");
    out.field("std_mc_t" + format_time(snap.time), g, snap.sd, "std");
  }

  const auto hyp = transport::hyperbolicity_check(field.S[g.mx / 2], u_coeffs, fpar, tensors);
  res.manifest = {{"experiment", "riemann1d"},
                  {"config", config_echo(cfg)},
                  {"basis", {{"dims", spec.dims},
                             {"poly_degree", spec.poly_degree},
                             {"resolution_levels", spec.resolution_levels},
                             {"P", basis.size()}}},
                  {"tensors", tensor_stats_json(tensors)},
                  {"snapshots", snapshots_json(res.mw)},
                  {"shock_band", band_json},
                  {"conservation_defect", mwrun.max_conservation_defect},
                  {"hyperbolicity", {{"min_denominator_eig", hyp.min_denominator_eig},
                                     {"max_imag_eig", hyp.max_imag_eig},
                                     {"spd", hyp.spd}}},
                  {"macc", engine.counters().macc},
                  {"mc", {{"samples", nmc}, {"failures", mcres.failures},
                          {"seed", seed}, {"wall_seconds", mc_seconds}}},
                  {"timings", {{"mw_wall_seconds", mwrun.wall_seconds}}}};
  res.manifest["outputs"] = out.files;
  out.json_file("manifest.json", res.manifest);
  res.outputs = out.files;
  return res;
}

// ---------------------------------------------------------------------------
// 2D line injection with a tabulated velocity covariance
// ---------------------------------------------------------------------------

ExperimentResult run_line_injection(const RunOptions& opt) {
  const IniConfig& cfg = opt.config;
  ExperimentResult res;
  OutputWriter out{opt, {}};

  const int d = cfg.get("kl.terms", 4);
  const auto spec = basis_spec(cfg, d, 0, 0, 2);  // total order 2 by default
  const auto basis = mw::MwBasis::build(spec);
  const auto rule = mw::build_quadrature(basis);
  const auto tensors = ProductTensors::build(basis, rule, 1e-14,
                                             std::int64_t(cfg.get("tensors.quad_nnz_cap", 1 << 26)),
                                             exec_mode(cfg));
  const FluxParams fpar = flux_params(cfg);

  fv::Grid g;
  g.mx = cfg.get("grid.mx", opt.paper_scale ? 40 : 20);
  g.my = cfg.get("grid.my", opt.paper_scale ? 80 : 40);
  g.dx = 1.0 / g.mx;
  g.dy = 1.0 / g.my;
  res.grid = g;

  // velocity covariance: built-in kernels or a user table
  const std::string kind = cfg.get("kl.kind", std::string("stream_demo"));
  kl::CovarianceTable table;
  if (kind == "file") {
    table = kl::CovarianceTable::load_csv(cfg.get("kl.cov_file", std::string()));
  } else {
    const double lx = cfg.get("kl.corr_x", 0.3), ly = cfg.get("kl.corr_y", 0.2);
    const double sigma_u = cfg.get("kl.sigma_u", 0.15);
    if (kind == "stream_demo") {
      const double sig_psi2 = sigma_u * sigma_u * ly * ly;
      table = kl::CovarianceTable::stream_function_gaussian(lx, ly, sig_psi2, g.dx, g.dy,
                                                            g.mx, g.my);
    } else if (kind == "separable") {
      table = kl::CovarianceTable::separable_exponential(lx, ly, sigma_u * sigma_u, g.dx,
                                                         g.dy, g.mx, g.my);
    } else {
      throw std::invalid_argument("unknown kl.kind: " + kind);
    }
  }

  const auto t_kl = Clock::now();
  auto klx = kl::gevp_simpson(table, g.mx, g.my, g.dx, g.dy, d);
  klx.xi_map = kl::XiMap::make(parse_xi_kind(
      cfg.get("kl.xi", std::string("truncated-gaussian"))));
  const double kl_seconds = seconds_since(t_kl);

  const double u_mean = cfg.get("velocity.u_mean", 1.0);
  const auto velocity = pressure::uniform_mean_inflow_field(u_mean, klx, basis, g);
  const double div_residual = velocity.max_divergence(g);

  fv::BoundarySpec bcs;
  bcs.left.kind = fv::BcKind::penalty_injection;
  bcs.left.range_lo = cfg.get("bc.inject_lo", 0.25);
  bcs.left.range_hi = cfg.get("bc.inject_hi", 0.75);
  bcs.left.injected = transport::unit_vector(basis.size());
  bcs.left.strength = cfg.get("bc.penalty_strength", 10.0);
  bcs.right.kind = fv::BcKind::outflow;
  bcs.bottom.kind = fv::BcKind::no_flow;
  bcs.top.kind = fv::BcKind::no_flow;

  fv::EngineConfig ec = engine_config(cfg);
  if (!std::isfinite(ec.dt_max))
    ec.dt_max = envelope_dt_cap(g, pressure::max_realized_speed(velocity, basis, rule),
                                fpar.viscosity_ratio, ec);
  fv::Engine engine(g, bcs, velocity, fpar, tensors, ec);
  fv::SgField field;
  field.S.assign(g.cells(), Vector::Zero(basis.size()));

  const auto times = cfg.get_list("run.snapshots", {0.25, 0.5});
  auto mwrun = advance_with_snapshots(engine, field, times);
  res.mw = mwrun.snaps;
  res.final_state = field;

  // Monte Carlo with per-sample velocity realizations
  const int nmc = cfg.get("run.mc_samples", opt.paper_scale ? 1000 : 500);
  const auto seed = std::uint64_t(cfg.get("run.seed", 2024));
  const auto t0 = Clock::now();
  auto mcres = mc::run_monte_carlo(
      nmc, seed, d, klx.xi_map,
      [&](const Vector& xi) {
        auto [ux_cells, uy_cells] = kl::sample_field(klx, xi);
        for (auto& u : ux_cells) u += u_mean;
        mc::ScalarProblem sp;
        sp.grid = g;
        sp.viscosity_ratio = fpar.viscosity_ratio;
        std::tie(sp.face_ux, sp.face_uy) = mc::scalar_faces_from_cells(g, ux_cells, uy_cells);
        sp.left = fv::BcKind::penalty_injection;
        sp.left_penalty = true;
        sp.penalty_lo = bcs.left.range_lo;
        sp.penalty_hi = bcs.left.range_hi;
        sp.penalty_strength = bcs.left.strength;
        sp.penalty_value = 1.0;
        sp.right = fv::BcKind::outflow;
        sp.bottom = fv::BcKind::no_flow;
        sp.top = fv::BcKind::no_flow;
        sp.cfl_2d = cfg.get("engine.cfl_2d", 0.25);
        double umax = 0.0;
        for (double uu : sp.face_ux) umax = std::max(umax, std::abs(uu));
        for (double uu : sp.face_uy) umax = std::max(umax, std::abs(uu));
        sp.dt_max =
            sp.cfl_2d * std::min(g.dx, g.dy) /
            std::max(2.0 * umax * transport::max_frac_flow_deriv(sp.viscosity_ratio), 1e-300);
        return mc::scalar_solve_snapshots(sp, std::vector<double>(g.cells(), 0.0), times);
      },
      g.cells(), static_cast<int>(times.size()), exec_mode(cfg));
  const double mc_seconds = seconds_since(t0);
  for (std::size_t s = 0; s < times.size(); ++s)
    res.mc.push_back({times[s], mcres.mean[s], mcres.sd[s]});

  for (const auto& snap : res.mw) {
    out.field("mean_t" + format_time(snap.time), g, snap.mean, "mean");
    out.field("std_t" + format_time(snap.time), g, snap.sd, "std");
  }
  for (const auto& snap : res.mc) {
    out.field("mean_mc_t" + format_time(snap.time), g, snap.mean, "mean");
    out.field("std_mc_t" + format_time(snap.time), g, snap.sd, "std");
  }

  nlohmann::json eig = nlohmann::json::array();
  for (int k = 0; k < klx.terms(); ++k) eig.push_back(klx.eigenvalues[k]);
  res.manifest = {{"experiment", "line-injection"},
                  {"config", config_echo(cfg)},
                  {"basis", {{"dims", spec.dims},
                             {"total_order", spec.total_order},
                             {"resolution_levels", spec.resolution_levels},
                             {"P", basis.size()}}},
                  {"tensors", tensor_stats_json(tensors)},
                  {"kl", {{"eigenvalues", eig},
                          {"energy_fraction", klx.energy_fraction()},
                          {"gevp_seconds", kl_seconds}}},
                  {"velocity", {{"max_mode_divergence", div_residual}}},
                  {"snapshots", snapshots_json(res.mw)},
                  {"conservation_defect", mwrun.max_conservation_defect},
                  {"macc", engine.counters().macc},
                  {"mc", {{"samples", nmc}, {"failures", mcres.failures},
                          {"seed", seed}, {"wall_seconds", mc_seconds}}},
                  {"timings", {{"mw_wall_seconds", mwrun.wall_seconds}}}};
  res.manifest["outputs"] = out.files;
  out.json_file("manifest.json", res.manifest);
  res.outputs = out.files;
  return res;
}

// ---------------------------------------------------------------------------
// quarter five-spot with a lognormal permeability field
// ---------------------------------------------------------------------------

ExperimentResult run_five_spot(const RunOptions& opt) {
  const IniConfig& cfg = opt.config;
  ExperimentResult res;
  OutputWriter out{opt, {}};

  const int d = cfg.get("perm.kl_terms", 2);
  const auto spec = basis_spec(cfg, d, 0, 0, 4);  // total order 4: P = 15 at d = 2
  const auto basis = mw::MwBasis::build(spec);
  const auto rule = mw::build_quadrature(basis);
  const auto tensors = ProductTensors::build(basis, rule, 1e-14,
                                             std::int64_t(cfg.get("tensors.quad_nnz_cap", 1 << 26)),
                                             exec_mode(cfg));
  const FluxParams fpar = flux_params(cfg);

  fv::Grid g;
  g.mx = cfg.get("grid.mx", opt.paper_scale ? 50 : 25);
  g.my = cfg.get("grid.my", opt.paper_scale ? 50 : 25);
  g.dx = 1.0 / g.mx;
  g.dy = 1.0 / g.my;
  res.grid = g;

  // lognormal permeability: KL of the log field with separable exponential
  // covariance
  auto klperm = kl::exp_cov_eigenpairs_2d(
      cfg.get("perm.perm_corr_x", 0.3), cfg.get("perm.perm_corr_y", 0.3),
      cfg.get("perm.perm_sigma2", 1.0), 1.0, 1.0, d, g.mx, g.my,
      cfg.get("perm.pool", 16));
  const double mean_log = cfg.get("perm.mean_log_perm", 0.0);
  for (auto& m : klperm.mean_x) m = mean_log;
  klperm.xi_map =
      kl::XiMap::make(parse_xi_kind(cfg.get("perm.xi", std::string("truncated-gaussian"))));

  const double rate = cfg.get("wells.rate", 1.0);
  std::vector<fv::Well> wells = {{0, 0, rate}, {g.mx - 1, g.my - 1, -rate}};
  auto perm_to_faces = [&](const Vector& xi) {
    auto [logk, unused] = kl::sample_field(klperm, xi);
    (void)unused;
    pressure::PressureProblem pp;
    pp.mx = g.mx;
    pp.my = g.my;
    pp.dx = g.dx;
    pp.dy = g.dy;
    pp.perm.resize(g.cells());
    for (int c = 0; c < g.cells(); ++c) pp.perm[c] = std::exp(logk[c]);
    pp.sources = {{g.cell(0, 0), rate}, {g.cell(g.mx - 1, g.my - 1), -rate}};
    const auto sol = pressure::solve_pressure(pp);
    return std::pair{sol.face_ux, sol.face_uy};
  };

  const int qpts = cfg.get("perm.quad_points_per_dim", spec.total_order + 3);
  const auto proj_rule = spec.resolution_levels == 0
                             ? mw::tensor_gauss_rule(qpts, d)
                             : mw::build_quadrature(basis);
  const auto t_vel = Clock::now();
  const auto velocity = pressure::project_velocity_mw(perm_to_faces, basis, proj_rule,
                                                      klperm.xi_map, g, exec_mode(cfg));
  const double vel_seconds = seconds_since(t_vel);
  const double div_residual = velocity.max_divergence(g);

  fv::BoundarySpec bcs;
  bcs.left.kind = bcs.right.kind = bcs.bottom.kind = bcs.top.kind = fv::BcKind::no_flow;

  fv::EngineConfig ec = engine_config(cfg);
  if (!std::isfinite(ec.dt_max))
    ec.dt_max = envelope_dt_cap(g, pressure::max_realized_speed(velocity, basis, proj_rule),
                                fpar.viscosity_ratio, ec);
  fv::Engine engine(g, bcs, velocity, fpar, tensors, ec, wells);
  fv::SgField field;
  field.S.assign(g.cells(), Vector::Zero(basis.size()));

  const auto times = cfg.get_list("run.snapshots", {0.5, 1.0, 2.0});
  auto mwrun = advance_with_snapshots(engine, field, times);
  res.mw = mwrun.snaps;
  res.final_state = field;

  const int nmc = cfg.get("run.mc_samples", opt.paper_scale ? 1000 : 500);
  const auto seed = std::uint64_t(cfg.get("run.seed", 2024));
  const auto t0 = Clock::now();
  auto mcres = mc::run_monte_carlo(
      nmc, seed, d, klperm.xi_map,
      [&](const Vector& xi) {
        auto [fx, fy] = perm_to_faces(xi);
        mc::ScalarProblem sp;
        sp.grid = g;
        sp.viscosity_ratio = fpar.viscosity_ratio;
        sp.face_ux = std::move(fx);
        sp.face_uy = std::move(fy);
        sp.left = sp.right = sp.bottom = sp.top = fv::BcKind::no_flow;
        sp.wells = wells;
        sp.cfl_2d = cfg.get("engine.cfl_2d", 0.25);
        double umax = 0.0;
        for (double uu : sp.face_ux) umax = std::max(umax, std::abs(uu));
        for (double uu : sp.face_uy) umax = std::max(umax, std::abs(uu));
        sp.dt_max =
            sp.cfl_2d * std::min(g.dx, g.dy) /
            std::max(2.0 * umax * transport::max_frac_flow_deriv(sp.viscosity_ratio), 1e-300);
        return mc::scalar_solve_snapshots(sp, std::vector<double>(g.cells(), 0.0), times);
      },
      g.cells(), static_cast<int>(times.size()), exec_mode(cfg));
  const double mc_seconds = seconds_since(t0);
  for (std::size_t s = 0; s < times.size(); ++s)
    res.mc.push_back({times[s], mcres.mean[s], mcres.sd[s]});

  for (const auto& snap : res.mw) {
    out.field("mean_t" + format_time(snap.time), g, snap.mean, "mean");
    out.field("std_t" + format_time(snap.time), g, snap.sd, "std");
  }
  for (const auto& snap : res.mc) {
    out.field("mean_mc_t" + format_time(snap.time), g, snap.mean, "mean");
    out.field("std_mc_t" + format_time(snap.time), g, snap.sd, "std");
  }

  nlohmann::json eig = nlohmann::json::array();
  for (int k = 0; k < klperm.terms(); ++k) eig.push_back(klperm.eigenvalues[k]);
  res.manifest = {{"experiment", "five-spot"},
                  {"config", config_echo(cfg)},
                  {"basis", {{"dims", spec.dims},
                             {"total_order", spec.total_order},
                             {"P", basis.size()}}},
                  {"tensors", tensor_stats_json(tensors)},
                  {"kl", {{"eigenvalues", eig}, {"energy_fraction", klperm.energy_fraction()}}},
                  {"velocity", {{"max_mode_divergence", div_residual},
                                {"quadrature_nodes", proj_rule.node_count()},
                                {"preprocess_seconds", vel_seconds}}},
                  {"snapshots", snapshots_json(res.mw)},
                  {"conservation_defect", mwrun.max_conservation_defect},
                  {"macc", engine.counters().macc},
                  {"mc", {{"samples", nmc}, {"failures", mcres.failures},
                          {"seed", seed}, {"wall_seconds", mc_seconds}}},
                  {"timings", {{"mw_wall_seconds", mwrun.wall_seconds}}}};
  res.manifest["outputs"] = out.files;
  out.json_file("manifest.json", res.manifest);
  res.outputs = out.files;
  return res;
}

// ---------------------------------------------------------------------------
// full-vs-reduced timing benchmark on the 1D Riemann setup
// ---------------------------------------------------------------------------

BenchResult run_bench(const RunOptions& opt) {
  const IniConfig& cfg = opt.config;
  BenchResult res;
  OutputWriter out{opt, {}};

  const int poly = cfg.get("bench.poly_degree", 2);
  const auto plist = cfg.get_list("bench.p_list", {12, 24, 48, 96});
  const int cells = cfg.get("bench.cells", 120);
  const int steps = cfg.get("bench.steps", opt.paper_scale ? 120 : 40);
  const double eps = cfg.get("flux.epsilon", 1e-10);

  fv::Grid g;
  g.mx = cells;
  g.x0 = -0.05;
  g.dx = 0.15 / cells;

  const double u_min = 0.8, u_max = 1.2;

  for (double Pd : plist) {
    const int P = static_cast<int>(Pd);
    if (P % (poly + 1) != 0)
      throw std::invalid_argument("bench P must be a multiple of poly_degree + 1");
    int levels = 0, blocks = P / (poly + 1);
    while ((1 << levels) < blocks) ++levels;
    if ((1 << levels) != blocks)
      throw std::invalid_argument("bench P must equal (poly_degree+1) * 2^levels");

    mw::MwBasisSpec spec;
    spec.dims = 1;
    spec.poly_degree = poly;
    spec.resolution_levels = levels;
    const auto basis = mw::MwBasis::build(spec);
    const auto rule = mw::build_quadrature(basis);
    const auto tensors =
        ProductTensors::build(basis, rule, 1e-14,
                              std::int64_t(cfg.get("tensors.quad_nnz_cap", 1 << 26)),
                              exec_mode(cfg));

    const Vector u_coeffs = pressure::project_scalar(
        [&](const Vector& eta) {
          return 0.5 * (u_max + u_min) + 0.5 * (u_max - u_min) * eta[0];
        },
        basis, rule);
    const auto velocity = fv::MwVelocityField::uniform(g, u_coeffs, Vector());

    fv::BoundarySpec bcs;
    bcs.left = {fv::BcKind::dirichlet, transport::unit_vector(P), 0, 0, {}, 0};
    bcs.right = {fv::BcKind::dirichlet, Vector::Zero(P), 0, 0, {}, 0};

    auto initial = [&] {
      fv::SgField f;
      f.S.assign(g.cells(), Vector::Zero(P));
      for (int i = 0; i < g.mx; ++i)
        if (g.xc(i) <= 0.0) f.S[i] = transport::unit_vector(P);
      return f;
    };

    fv::SgField full_state, reduced_state;
    BenchRow full_row{P, "full", 0.0, 0, 0.0};
    BenchRow red_row{P, "reduced", 0.0, 0, 0.0};
    for (int pass = 0; pass < 2; ++pass) {
      FluxParams fp = flux_params(cfg);
      fp.epsilon = pass == 0 ? 0.0 : eps;
      fv::EngineConfig ec = engine_config(cfg);
      if (!std::isfinite(ec.dt_max))
        ec.dt_max = envelope_dt_cap(g, pressure::max_realized_speed(velocity, basis, rule),
                                    fp.viscosity_ratio, ec);
      fv::Engine engine(g, bcs, velocity, fp, tensors, ec);
      fv::SgField field = initial();
      const double dt = engine.stable_dt(field);
      const auto t0 = Clock::now();
      for (int s = 0; s < steps; ++s) engine.step(field, dt);
      const double wall = seconds_since(t0);
      if (pass == 0) {
        full_row.wall_seconds = wall;
        full_row.macc_count = engine.counters().macc;
        full_state = field;
      } else {
        red_row.wall_seconds = wall;
        red_row.macc_count = engine.counters().macc;
        reduced_state = field;
      }
    }
    double dev = 0.0;
    for (int c = 0; c < g.cells(); ++c)
      dev = std::max(dev,
                     (full_state.S[c] - reduced_state.S[c]).cwiseAbs().maxCoeff());
    red_row.deviation = dev;
    res.rows.push_back(full_row);
    res.rows.push_back(red_row);
  }

  std::string csv = "P,mode,wall_seconds,macc_count\n";
  for (const auto& r : res.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%s,%.6g,%llu\n", r.P, r.mode.c_str(), r.wall_seconds,
                  static_cast<unsigned long long>(r.macc_count));
    csv += buf;
  }
  out.text_file("timings.csv", csv);

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : res.rows)
    rows.push_back({{"P", r.P},
                    {"mode", r.mode},
                    {"wall_seconds", r.wall_seconds},
                    {"macc_count", r.macc_count},
                    {"deviation", r.deviation}});
  res.manifest = {{"experiment", "bench"},
                  {"config", config_echo(cfg)},
                  {"epsilon", eps},
                  {"steps", steps},
                  {"cells", cells},
                  {"rows", rows}};
  res.manifest["outputs"] = out.files;
  out.json_file("manifest.json", res.manifest);
  res.outputs = out.files;
  return res;
}

}  // namespace sgflow::cli
