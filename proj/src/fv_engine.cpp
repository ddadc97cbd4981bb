#include "sgflow/fv_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sgflow/errors.hpp"

namespace sgflow::fv {

namespace {

double minmod(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::min(a, b);
  if (a < 0.0 && b < 0.0) return std::max(a, b);
  return 0.0;
}

}  // namespace

MwVelocityField MwVelocityField::uniform(const Grid& g, const Vector& ux0, const Vector& uy0) {
  MwVelocityField v;
  v.ux.assign(std::size_t(g.mx + 1) * g.my, ux0);
  v.uy.assign(std::size_t(g.mx) * (g.my + 1), uy0);
  return v;
}

MwVelocityField MwVelocityField::from_cell_centered(const Grid& g,
                                                    const std::vector<Vector>& cx,
                                                    const std::vector<Vector>& cy) {
  MwVelocityField v;
  v.ux.resize(std::size_t(g.mx + 1) * g.my);
  v.uy.resize(std::size_t(g.mx) * (g.my + 1));
  for (int j = 0; j < g.my; ++j) {
    for (int i = 0; i <= g.mx; ++i) {
      const Vector& a = cx[g.cell(std::max(i - 1, 0), j)];
      const Vector& b = cx[g.cell(std::min(i, g.mx - 1), j)];
      v.ux[i + (g.mx + 1) * j] = 0.5 * (a + b);
    }
  }
  for (int j = 0; j <= g.my; ++j) {
    for (int i = 0; i < g.mx; ++i) {
      const Vector& a = cy[g.cell(i, std::max(j - 1, 0))];
      const Vector& b = cy[g.cell(i, std::min(j, g.my - 1))];
      v.uy[i + g.mx * j] = 0.5 * (a + b);
    }
  }
  return v;
}

double MwVelocityField::max_divergence(const Grid& g) const {
  double worst = 0.0;
  for (int j = 0; j < g.my; ++j) {
    for (int i = 0; i < g.mx; ++i) {
      Vector div = (ux[i + 1 + (g.mx + 1) * j] - ux[i + (g.mx + 1) * j]) / g.dx;
      if (!g.is1d()) div += (uy[i + g.mx * (j + 1)] - uy[i + g.mx * j]) / g.dy;
      worst = std::max(worst, div.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

double MwVelocityField::max_mode0_speed(const Grid& g) const {
  double m = 0.0;
  for (const auto& u : ux) m = std::max(m, std::abs(u[0]));
  if (!g.is1d())
    for (const auto& u : uy) m = std::max(m, std::abs(u[0]));
  return m;
}

std::pair<Vector, Vector> minmod_reconstruct(const Vector& left, const Vector& centre,
                                             const Vector& right) {
  Vector slope(centre.size());
  for (int k = 0; k < centre.size(); ++k)
    slope[k] = minmod(centre[k] - left[k], right[k] - centre[k]);
  return {centre - 0.5 * slope, centre + 0.5 * slope};
}

Vector hll_blend(const Vector& flux_left, const Vector& flux_right, const Vector& S_left,
                 const Vector& S_right, double sigma_left, double sigma_right) {
  if (sigma_left >= 0.0) return flux_left;
  if (sigma_right <= 0.0) return flux_right;
  return (sigma_right * flux_left - sigma_left * flux_right +
          sigma_left * sigma_right * (S_right - S_left)) /
         (sigma_right - sigma_left);
}

std::pair<std::vector<double>, std::vector<double>> field_statistics(const SgField& field) {
  std::vector<double> mean(field.S.size()), sd(field.S.size());
  for (std::size_t c = 0; c < field.S.size(); ++c) {
    mean[c] = field.S[c][0];
    const auto n = field.S[c].size();
    sd[c] = n > 1 ? field.S[c].tail(n - 1).norm() : 0.0;
  }
  return {std::move(mean), std::move(sd)};
}

Engine::Engine(Grid grid, BoundarySpec bcs, MwVelocityField velocity, FluxParams flux,
               const ProductTensors& tensors, EngineConfig config, std::vector<Well> wells)
    : grid_(std::move(grid)),
      bcs_(std::move(bcs)),
      vel_(std::move(velocity)),
      flux_(flux),
      tensors_(tensors),
      cfg_(config),
      wells_(std::move(wells)),
      P_(tensors.size()) {
  if (static_cast<int>(vel_.ux.size()) != (grid_.mx + 1) * grid_.my)
    throw std::invalid_argument("velocity field does not match the grid (x faces)");
  if (!grid_.is1d() && static_cast<int>(vel_.uy.size()) != grid_.mx * (grid_.my + 1))
    throw std::invalid_argument("velocity field does not match the grid (y faces)");
}

Vector Engine::ghost_state(const BoundarySide& side, const Vector& interior) const {
  switch (side.kind) {
    case BcKind::dirichlet:
      return side.value;
    case BcKind::no_flow:
    case BcKind::outflow:
    case BcKind::penalty_injection:
      return interior;
  }
  return interior;
}

std::pair<double, double> Engine::cell_wave_bounds(const Vector& S, const Vector& u_cell) const {
  return transport::wave_speed_bounds(S, S, u_cell, flux_, tensors_);
}

void Engine::check_finite(const std::vector<Vector>& S, const char* where) const {
  for (std::size_t c = 0; c < S.size(); ++c) {
    for (int k = 0; k < S[c].size(); ++k) {
      if (!std::isfinite(S[c][k])) {
        const int i = static_cast<int>(c) % grid_.mx, j = static_cast<int>(c) / grid_.mx;
        throw std::runtime_error(std::string("non-finite state in ") + where + " at cell (" +
                                 std::to_string(i) + "," + std::to_string(j) + "), mode " +
                                 std::to_string(k));
      }
    }
  }
}

Engine::Stage Engine::compute_stage(const std::vector<Vector>& S) {
  const int mx = grid_.mx, my = grid_.my;
  const int P = P_;
  Stage st;
  st.rate.assign(grid_.cells(), Vector::Zero(P));

  // --- per-cell wave-speed caches, one per sweep direction ---
  std::vector<std::pair<double, double>> wx(grid_.cells());
  parallel_for(grid_.cells(), cfg_.exec, [&](int c) {
    const int i = c % mx, j = c / mx;
    const Vector u = 0.5 * (vel_.ux[i + (mx + 1) * j] + vel_.ux[i + 1 + (mx + 1) * j]);
    wx[c] = cell_wave_bounds(S[c], u);
  });
  std::vector<std::pair<double, double>> wy;
  if (!grid_.is1d()) {
    wy.resize(grid_.cells());
    parallel_for(grid_.cells(), cfg_.exec, [&](int c) {
      const int i = c % mx, j = c / mx;
      const Vector u = 0.5 * (vel_.uy[i + mx * j] + vel_.uy[i + mx * (j + 1)]);
      wy[c] = cell_wave_bounds(S[c], u);
    });
  }

  OpCounters stage_ops;

  // --- x sweep ---
  {
    std::vector<Vector> flux(std::size_t(mx + 1) * my);
    const int nfaces = (mx + 1) * my;
    std::vector<OpCounters> per_thread(nfaces);
    parallel_for(nfaces, cfg_.exec, [&](int f) {
      const int i = f % (mx + 1), j = f / (mx + 1);
      const bool at_left = (i == 0), at_right = (i == mx);
      if ((at_left && bcs_.left.kind == BcKind::no_flow) ||
          (at_right && bcs_.right.kind == BcKind::no_flow)) {
        flux[f] = Vector::Zero(P);
        return;
      }
      auto cellv = [&](int ii) -> const Vector& { return S[grid_.cell(ii, j)]; };
      auto face_states = [&](int ii) {  // reconstructed faces of cell ii
        const Vector& cm = ii > 0 ? cellv(ii - 1) : ghost_state(bcs_.left, cellv(0));
        const Vector& cp = ii < mx - 1 ? cellv(ii + 1) : ghost_state(bcs_.right, cellv(mx - 1));
        if (!cfg_.use_limiter) {
          Vector slope = 0.5 * (cp - cm);
          return std::pair<Vector, Vector>{cellv(ii) - 0.5 * slope, cellv(ii) + 0.5 * slope};
        }
        return minmod_reconstruct(cm, cellv(ii), cp);
      };
      Vector SL, SR;
      double lo, hi;
      if (at_left) {
        SL = ghost_state(bcs_.left, cellv(0));
        SR = face_states(0).first;
        std::tie(lo, hi) = wx[grid_.cell(0, j)];
      } else if (at_right) {
        SL = face_states(mx - 1).second;
        SR = ghost_state(bcs_.right, cellv(mx - 1));
        std::tie(lo, hi) = wx[grid_.cell(mx - 1, j)];
      } else {
        SL = face_states(i - 1).second;
        SR = face_states(i).first;
        const auto [ll, lh] = wx[grid_.cell(i - 1, j)];
        const auto [rl, rh] = wx[grid_.cell(i, j)];
        lo = std::min(ll, rl);
        hi = std::max(lh, rh);
      }
      const Vector& uf = vel_.ux[f];
      OpCounters* ops = &per_thread[f];
      // the endpoint spectra can both vanish across a strong jump (the
      // fractional flow is non-convex), so fold in the midpoint state
      if ((SL - SR).cwiseAbs().maxCoeff() > 1e-8) {
        const Vector mid = 0.5 * (SL + SR);
        const auto [ml, mh] = transport::wave_speed_bounds(mid, mid, uf, flux_, tensors_);
        lo = std::min(lo, ml);
        hi = std::max(hi, mh);
      }
      if (lo >= 0.0) {
        flux[f] = transport::sg_flux(SL, uf, flux_, tensors_, ops);
      } else if (hi <= 0.0) {
        flux[f] = transport::sg_flux(SR, uf, flux_, tensors_, ops);
      } else {
        const Vector fl = transport::sg_flux(SL, uf, flux_, tensors_, ops);
        const Vector fr = transport::sg_flux(SR, uf, flux_, tensors_, ops);
        flux[f] = hll_blend(fl, fr, SL, SR, lo, hi);
      }
    });
    for (const auto& ops : per_thread) stage_ops.macc += ops.macc;

    const double transverse = grid_.is1d() ? 1.0 : grid_.dy;
    for (int j = 0; j < my; ++j) {
      for (int i = 0; i < mx; ++i) {
        const int c = grid_.cell(i, j);
        st.rate[c] -=
            (flux[i + 1 + (mx + 1) * j] - flux[i + (mx + 1) * j]) / (grid_.phi(c) * grid_.dx);
      }
      st.boundary_rate +=
          (flux[0 + (mx + 1) * j][0] - flux[mx + (mx + 1) * j][0]) * transverse;
    }
  }

  // --- y sweep ---
  if (!grid_.is1d()) {
    std::vector<Vector> flux(std::size_t(mx) * (my + 1));
    const int nfaces = mx * (my + 1);
    std::vector<OpCounters> per_thread(nfaces);
    // transverse fluxes along a penalty-injection inlet are suppressed so
    // that u_y fluctuations cannot transport saturation along the inlet
    const bool kill_left = bcs_.left.kind == BcKind::penalty_injection;
    const bool kill_right = bcs_.right.kind == BcKind::penalty_injection;
    parallel_for(nfaces, cfg_.exec, [&](int f) {
      const int i = f % mx, j = f / mx;
      const bool at_bottom = (j == 0), at_top = (j == my);
      if ((at_bottom && bcs_.bottom.kind == BcKind::no_flow) ||
          (at_top && bcs_.top.kind == BcKind::no_flow) || (kill_left && i == 0) ||
          (kill_right && i == mx - 1)) {
        flux[f] = Vector::Zero(P);
        return;
      }
      auto cellv = [&](int jj) -> const Vector& { return S[grid_.cell(i, jj)]; };
      auto face_states = [&](int jj) {
        const Vector& cm = jj > 0 ? cellv(jj - 1) : ghost_state(bcs_.bottom, cellv(0));
        const Vector& cp = jj < my - 1 ? cellv(jj + 1) : ghost_state(bcs_.top, cellv(my - 1));
        if (!cfg_.use_limiter) {
          Vector slope = 0.5 * (cp - cm);
          return std::pair<Vector, Vector>{cellv(jj) - 0.5 * slope, cellv(jj) + 0.5 * slope};
        }
        return minmod_reconstruct(cm, cellv(jj), cp);
      };
      Vector SL, SR;
      double lo, hi;
      if (at_bottom) {
        SL = ghost_state(bcs_.bottom, cellv(0));
        SR = face_states(0).first;
        std::tie(lo, hi) = wy[grid_.cell(i, 0)];
      } else if (at_top) {
        SL = face_states(my - 1).second;
        SR = ghost_state(bcs_.top, cellv(my - 1));
        std::tie(lo, hi) = wy[grid_.cell(i, my - 1)];
      } else {
        SL = face_states(j - 1).second;
        SR = face_states(j).first;
        const auto [ll, lh] = wy[grid_.cell(i, j - 1)];
        const auto [rl, rh] = wy[grid_.cell(i, j)];
        lo = std::min(ll, rl);
        hi = std::max(lh, rh);
      }
      const Vector& uf = vel_.uy[f];
      OpCounters* ops = &per_thread[f];
      if ((SL - SR).cwiseAbs().maxCoeff() > 1e-8) {
        const Vector mid = 0.5 * (SL + SR);
        const auto [ml, mh] = transport::wave_speed_bounds(mid, mid, uf, flux_, tensors_);
        lo = std::min(lo, ml);
        hi = std::max(hi, mh);
      }
      if (lo >= 0.0) {
        flux[f] = transport::sg_flux(SL, uf, flux_, tensors_, ops);
      } else if (hi <= 0.0) {
        flux[f] = transport::sg_flux(SR, uf, flux_, tensors_, ops);
      } else {
        const Vector fl = transport::sg_flux(SL, uf, flux_, tensors_, ops);
        const Vector fr = transport::sg_flux(SR, uf, flux_, tensors_, ops);
        flux[f] = hll_blend(fl, fr, SL, SR, lo, hi);
      }
    });
    for (const auto& ops : per_thread) stage_ops.macc += ops.macc;

    for (int j = 0; j < my; ++j)
      for (int i = 0; i < mx; ++i) {
        const int c = grid_.cell(i, j);
        st.rate[c] -= (flux[i + mx * (j + 1)] - flux[i + mx * j]) / (grid_.phi(c) * grid_.dy);
      }
    for (int i = 0; i < mx; ++i)
      st.boundary_rate += (flux[i][0] - flux[i + mx * my][0]) * grid_.dx;
  }

  // --- weak penalty injection sources ---
  auto apply_penalty = [&](const BoundarySide& side, bool vertical_side, bool at_low_end) {
    if (side.kind != BcKind::penalty_injection) return;
    const double h = vertical_side ? grid_.dx : grid_.dy;
    if (vertical_side) {
      const int i = at_low_end ? 0 : mx - 1;
      const int fi = at_low_end ? 0 : mx;  // boundary x-face index offset
      for (int j = 0; j < my; ++j) {
        const double y = grid_.yc(j);
        if (y < side.range_lo || y > side.range_hi) continue;
        const int c = grid_.cell(i, j);
        const Vector& uf = vel_.ux[fi + (mx + 1) * j];
        const Vector src = side.strength *
                           tensors_.galerkin_product(uf, (side.injected - S[c]).eval()) / h;
        st.rate[c] += src / grid_.phi(c);
        st.boundary_rate += src[0] * grid_.cell_volume();
      }
    } else {
      const int j = at_low_end ? 0 : my - 1;
      const int fj = at_low_end ? 0 : my;
      for (int i = 0; i < mx; ++i) {
        const double x = grid_.xc(i);
        if (x < side.range_lo || x > side.range_hi) continue;
        const int c = grid_.cell(i, j);
        const Vector& uf = vel_.uy[i + mx * fj];
        const Vector src = side.strength *
                           tensors_.galerkin_product(uf, (side.injected - S[c]).eval()) / h;
        st.rate[c] += src / grid_.phi(c);
        st.boundary_rate += src[0] * grid_.cell_volume();
      }
    }
  };
  apply_penalty(bcs_.left, true, true);
  apply_penalty(bcs_.right, true, false);
  apply_penalty(bcs_.bottom, false, true);
  apply_penalty(bcs_.top, false, false);

  // --- wells ---
  for (const auto& w : wells_) {
    const int c = grid_.cell(w.i, w.j);
    const double vol = grid_.cell_volume();
    if (w.rate > 0.0) {
      Vector src = Vector::Zero(P);
      src[0] = w.rate;  // injected water: fractional flow 1
      st.rate[c] += src / (grid_.phi(c) * vol);
      st.boundary_rate += w.rate;
    } else if (w.rate < 0.0) {
      const Vector fgal = transport::sg_frac_flow_coeffs(S[c], flux_, tensors_, &stage_ops);
      st.rate[c] += w.rate * fgal / (grid_.phi(c) * vol);
      st.boundary_rate += w.rate * fgal[0];
    }
  }

  counters_.macc += stage_ops.macc;
  return st;
}

double Engine::stable_dt(const SgField& field) const {
  const int mx = grid_.mx;
  double max_x = 0.0, max_y = 0.0;
  std::vector<double> mx_per_cell(grid_.cells(), 0.0), my_per_cell(grid_.cells(), 0.0);
  parallel_for(grid_.cells(), cfg_.exec, [&](int c) {
    const int i = c % mx, j = c / mx;
    const Vector u = 0.5 * (vel_.ux[i + (mx + 1) * j] + vel_.ux[i + 1 + (mx + 1) * j]);
    auto [lo, hi] = cell_wave_bounds(field.S[c], u);
    mx_per_cell[c] = std::max(std::abs(lo), std::abs(hi));
    if (!grid_.is1d()) {
      const Vector v = 0.5 * (vel_.uy[i + mx * j] + vel_.uy[i + mx * (j + 1)]);
      auto [lo2, hi2] = cell_wave_bounds(field.S[c], v);
      my_per_cell[c] = std::max(std::abs(lo2), std::abs(hi2));
    }
  });
  for (int c = 0; c < grid_.cells(); ++c) {
    max_x = std::max(max_x, mx_per_cell[c]);
    max_y = std::max(max_y, my_per_cell[c]);
  }

  double dt = cfg_.dt_max;
  if (grid_.is1d()) {
    if (max_x > 0.0) dt = std::min(dt, cfg_.cfl_1d * grid_.dx / max_x);
  } else {
    if (max_x + max_y > 0.0)
      dt = std::min(dt, cfg_.cfl_2d * std::min(grid_.dx, grid_.dy) / (max_x + max_y));
  }
  // penalty relaxation rate participates in the stability bound
  for (const BoundarySide* side : {&bcs_.left, &bcs_.right, &bcs_.bottom, &bcs_.top}) {
    if (side->kind != BcKind::penalty_injection) continue;
    const double h = (side == &bcs_.left || side == &bcs_.right) ? grid_.dx : grid_.dy;
    const double rate = side->strength * vel_.max_mode0_speed(grid_) / h;
    if (rate > 0.0) dt = std::min(dt, 0.5 / rate);
  }
  if (!std::isfinite(dt))
    throw std::runtime_error("stable_dt: no finite time step (configure dt_max)");
  return dt;
}

StepReport Engine::step(SgField& field, double dt) {
  const int n = grid_.cells();
  const double vol = grid_.cell_volume();
  double mass0 = 0.0;
  for (int c = 0; c < n; ++c) mass0 += grid_.phi(c) * field.S[c][0] * vol;

  const Stage s1 = compute_stage(field.S);
  std::vector<Vector> mid(n);
  for (int c = 0; c < n; ++c) mid[c] = field.S[c] + dt * s1.rate[c];
  check_finite(mid, "RK stage 1");

  const Stage s2 = compute_stage(mid);
  for (int c = 0; c < n; ++c)
    field.S[c] = 0.5 * (field.S[c] + mid[c] + dt * s2.rate[c]);
  check_finite(field.S, "RK stage 2");

  double mass1 = 0.0;
  for (int c = 0; c < n; ++c) mass1 += grid_.phi(c) * field.S[c][0] * vol;

  StepReport rep;
  rep.dt = dt;
  rep.mass_change = mass1 - mass0;
  rep.boundary_flux = 0.5 * dt * (s1.boundary_rate + s2.boundary_rate);
  return rep;
}

StepReport Engine::advance_to(SgField& field, double t_now, double t_target) {
  StepReport total;
  double t = t_now;
  while (t < t_target - 1e-14 * std::max(1.0, std::abs(t_target))) {
    double dt = std::min(stable_dt(field), t_target - t);
    SgField backup = field;
    try {
      const StepReport rep = step(field, dt);
      total.mass_change += rep.mass_change;
      total.boundary_flux += rep.boundary_flux;
      total.dt = rep.dt;
    } catch (const HyperbolicityRiskError&) {
      // one halving before giving up, per the recoverable-error policy
      field = backup;
      const StepReport rep = step(field, 0.5 * dt);
      total.mass_change += rep.mass_change;
      total.boundary_flux += rep.boundary_flux;
      total.dt = rep.dt;
      dt *= 0.5;
    }
    t += dt;
  }
  return total;
}

void Engine::save_coefficients(const SgField& field, const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& c : field.S)
    os.write(reinterpret_cast<const char*>(c.data()),
             static_cast<std::streamsize>(sizeof(double)) * c.size());
  std::ofstream sc(path + ".json");
  sc << "{\n  \"mx\": " << grid_.mx << ",\n  \"my\": " << grid_.my << ",\n  \"modes\": " << P_
     << ",\n  \"layout\": \"row = cell (x fastest), little-endian float64\"\n}\n";
}

}  // namespace sgflow::fv
