#include "sgflow/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sgflow/parallel.hpp"
#include "sgflow/transport.hpp"

namespace sgflow::mc {

namespace {

double minmod(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::min(a, b);
  if (a < 0.0 && b < 0.0) return std::max(a, b);
  return 0.0;
}

struct ScalarEngine {
  const ScalarProblem& pr;
  double a;

  double ghost(fv::BcKind kind, double value, double interior) const {
    return kind == fv::BcKind::dirichlet ? value : interior;
  }

  std::pair<double, double> cell_bounds(double s, double u) const {
    const double lam = u * transport::frac_flow_deriv(s, a);
    return {lam - 0.05 * std::abs(lam), lam + 0.05 * std::abs(lam)};
  }

  double flux(double s, double u) const { return u * transport::frac_flow(s, a); }

  // one spatial-operator evaluation
  std::vector<double> rate(const std::vector<double>& S) const {
    const auto& g = pr.grid;
    const int mx = g.mx, my = g.my;
    std::vector<double> out(g.cells(), 0.0);

    std::vector<double> wlo(g.cells()), whi(g.cells());
    for (int c = 0; c < g.cells(); ++c) {
      const int i = c % mx, j = c / mx;
      const double u = 0.5 * (pr.face_ux[i + (mx + 1) * j] + pr.face_ux[i + 1 + (mx + 1) * j]);
      std::tie(wlo[c], whi[c]) = cell_bounds(S[c], u);
    }

    auto hll = [&](double sl, double sr, double u, double lo, double hi) {
      // fold in the midpoint state across significant jumps (non-convex flux)
      if (std::abs(sl - sr) > 1e-8) {
        auto [ml, mh] = cell_bounds(0.5 * (sl + sr), u);
        lo = std::min(lo, ml);
        hi = std::max(hi, mh);
      }
      if (lo >= 0.0) return flux(sl, u);
      if (hi <= 0.0) return flux(sr, u);
      return (hi * flux(sl, u) - lo * flux(sr, u) + lo * hi * (sr - sl)) / (hi - lo);
    };

    // x sweep
    for (int j = 0; j < my; ++j) {
      auto cv = [&](int ii) { return S[g.cell(ii, j)]; };
      auto faces = [&](int ii) {
        const double cm = ii > 0 ? cv(ii - 1) : ghost(pr.left, pr.left_value, cv(0));
        const double cp = ii < mx - 1 ? cv(ii + 1) : ghost(pr.right, pr.right_value, cv(mx - 1));
        double slope = pr.use_limiter ? minmod(cv(ii) - cm, cp - cv(ii)) : 0.5 * (cp - cm);
        return std::pair<double, double>{cv(ii) - 0.5 * slope, cv(ii) + 0.5 * slope};
      };
      std::vector<double> F(mx + 1);
      for (int i = 0; i <= mx; ++i) {
        const bool at_l = i == 0, at_r = i == mx;
        if ((at_l && pr.left == fv::BcKind::no_flow) ||
            (at_r && pr.right == fv::BcKind::no_flow)) {
          F[i] = 0.0;
          continue;
        }
        double sl, sr, lo, hi;
        if (at_l) {
          sl = ghost(pr.left, pr.left_value, cv(0));
          sr = faces(0).first;
          std::tie(lo, hi) = std::pair{wlo[g.cell(0, j)], whi[g.cell(0, j)]};
        } else if (at_r) {
          sl = faces(mx - 1).second;
          sr = ghost(pr.right, pr.right_value, cv(mx - 1));
          std::tie(lo, hi) = std::pair{wlo[g.cell(mx - 1, j)], whi[g.cell(mx - 1, j)]};
        } else {
          sl = faces(i - 1).second;
          sr = faces(i).first;
          lo = std::min(wlo[g.cell(i - 1, j)], wlo[g.cell(i, j)]);
          hi = std::max(whi[g.cell(i - 1, j)], whi[g.cell(i, j)]);
        }
        F[i] = hll(sl, sr, pr.face_ux[i + (mx + 1) * j], lo, hi);
      }
      for (int i = 0; i < mx; ++i) {
        const int c = g.cell(i, j);
        out[c] -= (F[i + 1] - F[i]) / (g.phi(c) * g.dx);
      }
    }

    // y sweep
    if (!g.is1d()) {
      std::vector<double> vlo(g.cells()), vhi(g.cells());
      for (int c = 0; c < g.cells(); ++c) {
        const int i = c % mx, j = c / mx;
        const double u = 0.5 * (pr.face_uy[i + mx * j] + pr.face_uy[i + mx * (j + 1)]);
        std::tie(vlo[c], vhi[c]) = cell_bounds(S[c], u);
      }
      for (int i = 0; i < mx; ++i) {
        auto cv = [&](int jj) { return S[g.cell(i, jj)]; };
        auto faces = [&](int jj) {
          const double cm = jj > 0 ? cv(jj - 1) : ghost(pr.bottom, pr.bottom_value, cv(0));
          const double cp =
              jj < my - 1 ? cv(jj + 1) : ghost(pr.top, pr.top_value, cv(my - 1));
          double slope = pr.use_limiter ? minmod(cv(jj) - cm, cp - cv(jj)) : 0.5 * (cp - cm);
          return std::pair<double, double>{cv(jj) - 0.5 * slope, cv(jj) + 0.5 * slope};
        };
        std::vector<double> F(my + 1);
        for (int j = 0; j <= my; ++j) {
          const bool at_b = j == 0, at_t = j == my;
          const bool killed = pr.left_penalty && i == 0;
          if ((at_b && pr.bottom == fv::BcKind::no_flow) ||
              (at_t && pr.top == fv::BcKind::no_flow) || killed) {
            F[j] = 0.0;
            continue;
          }
          double sl, sr, lo, hi;
          if (at_b) {
            sl = ghost(pr.bottom, pr.bottom_value, cv(0));
            sr = faces(0).first;
            std::tie(lo, hi) = std::pair{vlo[g.cell(i, 0)], vhi[g.cell(i, 0)]};
          } else if (at_t) {
            sl = faces(my - 1).second;
            sr = ghost(pr.top, pr.top_value, cv(my - 1));
            std::tie(lo, hi) = std::pair{vlo[g.cell(i, my - 1)], vhi[g.cell(i, my - 1)]};
          } else {
            sl = faces(j - 1).second;
            sr = faces(j).first;
            lo = std::min(vlo[g.cell(i, j - 1)], vlo[g.cell(i, j)]);
            hi = std::max(vhi[g.cell(i, j - 1)], vhi[g.cell(i, j)]);
          }
          F[j] = hll(sl, sr, pr.face_uy[i + mx * j], lo, hi);
        }
        for (int j = 0; j < my; ++j) {
          const int c = g.cell(i, j);
          out[c] -= (F[j + 1] - F[j]) / (g.phi(c) * g.dy);
        }
      }
    }

    // penalty injection on the left side
    if (pr.left_penalty) {
      for (int j = 0; j < my; ++j) {
        const double y = g.yc(j);
        if (y < pr.penalty_lo || y > pr.penalty_hi) continue;
        const int c = g.cell(0, j);
        const double u = pr.face_ux[0 + (mx + 1) * j];
        out[c] += pr.penalty_strength * u * (pr.penalty_value - S[c]) / (g.dx * g.phi(c));
      }
    }

    for (const auto& w : pr.wells) {
      const int c = g.cell(w.i, w.j);
      const double vol = g.cell_volume();
      if (w.rate > 0.0)
        out[c] += w.rate / (g.phi(c) * vol);
      else if (w.rate < 0.0)
        out[c] += w.rate * transport::frac_flow(S[c], a) / (g.phi(c) * vol);
    }
    return out;
  }

  double stable_dt(const std::vector<double>& S) const {
    const auto& g = pr.grid;
    const int mx = g.mx;
    double max_x = 0.0, max_y = 0.0;
    for (int c = 0; c < g.cells(); ++c) {
      const int i = c % mx, j = c / mx;
      const double u = 0.5 * (pr.face_ux[i + (mx + 1) * j] + pr.face_ux[i + 1 + (mx + 1) * j]);
      auto [lo, hi] = cell_bounds(S[c], u);
      max_x = std::max({max_x, std::abs(lo), std::abs(hi)});
      if (!g.is1d()) {
        const double v = 0.5 * (pr.face_uy[i + mx * j] + pr.face_uy[i + mx * (j + 1)]);
        auto [lo2, hi2] = cell_bounds(S[c], v);
        max_y = std::max({max_y, std::abs(lo2), std::abs(hi2)});
      }
    }
    double dt = pr.dt_max;
    if (g.is1d()) {
      if (max_x > 0.0) dt = std::min(dt, pr.cfl_1d * g.dx / max_x);
    } else if (max_x + max_y > 0.0) {
      dt = std::min(dt, pr.cfl_2d * std::min(g.dx, g.dy) / (max_x + max_y));
    }
    if (pr.left_penalty) {
      double umax = 0.0;
      for (double u : pr.face_ux) umax = std::max(umax, std::abs(u));
      const double r = pr.penalty_strength * umax / g.dx;
      if (r > 0.0) dt = std::min(dt, 0.5 / r);
    }
    if (!std::isfinite(dt)) throw std::runtime_error("scalar solver: no finite time step");
    return dt;
  }

  void step(std::vector<double>& S, double dt) const {
    const auto r1 = rate(S);
    std::vector<double> mid(S.size());
    for (std::size_t c = 0; c < S.size(); ++c) mid[c] = S[c] + dt * r1[c];
    const auto r2 = rate(mid);
    for (std::size_t c = 0; c < S.size(); ++c) {
      S[c] = 0.5 * (S[c] + mid[c] + dt * r2[c]);
      if (!std::isfinite(S[c]))
        throw std::runtime_error("scalar solver: non-finite state at cell " +
                                 std::to_string(c));
    }
  }
};

}  // namespace

std::vector<std::vector<double>> scalar_solve_snapshots(const ScalarProblem& problem,
                                                        std::vector<double> S0,
                                                        const std::vector<double>& times) {
  ScalarEngine eng{problem, problem.viscosity_ratio};
  std::vector<std::vector<double>> out;
  double t = 0.0;
  for (double target : times) {
    while (t < target - 1e-14 * std::max(1.0, target)) {
      double dt = std::min(eng.stable_dt(S0), target - t);
      eng.step(S0, dt);
      t += dt;
    }
    out.push_back(S0);
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> scalar_faces_from_cells(
    const fv::Grid& g, const std::vector<double>& cx, const std::vector<double>& cy) {
  std::vector<double> fx(std::size_t(g.mx + 1) * g.my), fy(std::size_t(g.mx) * (g.my + 1));
  for (int j = 0; j < g.my; ++j)
    for (int i = 0; i <= g.mx; ++i)
      fx[i + (g.mx + 1) * j] = 0.5 * (cx[g.cell(std::max(i - 1, 0), j)] +
                                      cx[g.cell(std::min(i, g.mx - 1), j)]);
  for (int j = 0; j <= g.my; ++j)
    for (int i = 0; i < g.mx; ++i)
      fy[i + g.mx * j] = 0.5 * (cy[g.cell(i, std::max(j - 1, 0))] +
                                cy[g.cell(i, std::min(j, g.my - 1))]);
  return {std::move(fx), std::move(fy)};
}

McResult run_monte_carlo(
    int n, std::uint64_t seed, int dims, const kl::XiMap& xi_map,
    const std::function<std::vector<std::vector<double>>(const Vector& xi)>& runner,
    int cells, int snapshots, ExecMode exec) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  const CounterRng rng(seed);
  constexpr int block_size = 32;
  const int nblocks = (n + block_size - 1) / block_size;

  struct Block {
    long count = 0;
    std::vector<std::vector<double>> mean, m2;  // [snapshot][cell]
    std::vector<std::string> failures;
  };
  std::vector<Block> blocks(nblocks);
  for (auto& b : blocks) {
    b.mean.assign(snapshots, std::vector<double>(cells, 0.0));
    b.m2.assign(snapshots, std::vector<double>(cells, 0.0));
  }

  parallel_for(nblocks, exec, [&](int bi) {
    Block& blk = blocks[bi];
    for (int s = bi * block_size; s < std::min(n, (bi + 1) * block_size); ++s) {
      Vector xi(dims);
      for (int l = 0; l < dims; ++l) xi[l] = xi_map(rng.uniform_pm1(s, l));
      std::vector<std::vector<double>> fields;
      try {
        fields = runner(xi);
      } catch (const std::exception& e) {
        blk.failures.push_back("sample " + std::to_string(s) + ": " + e.what());
        continue;
      }
      ++blk.count;
      for (int snap = 0; snap < snapshots; ++snap) {
        for (int c = 0; c < cells; ++c) {
          const double x = fields[snap][c];
          const double delta = x - blk.mean[snap][c];
          blk.mean[snap][c] += delta / blk.count;
          blk.m2[snap][c] += delta * (x - blk.mean[snap][c]);
        }
      }
    }
  });

  // deterministic pairwise merge in block order
  McResult res;
  res.samples = n;
  long count = 0;
  res.mean.assign(snapshots, std::vector<double>(cells, 0.0));
  std::vector<std::vector<double>> m2(snapshots, std::vector<double>(cells, 0.0));
  for (const auto& blk : blocks) {
    for (const auto& f : blk.failures) res.failure_log.push_back(f);
    if (blk.count == 0) continue;
    const long merged = count + blk.count;
    for (int snap = 0; snap < snapshots; ++snap) {
      for (int c = 0; c < cells; ++c) {
        const double delta = blk.mean[snap][c] - res.mean[snap][c];
        res.mean[snap][c] += delta * blk.count / merged;
        m2[snap][c] += blk.m2[snap][c] +
                       delta * delta * double(count) * double(blk.count) / merged;
      }
    }
    count = merged;
  }
  res.failures = static_cast<int>(res.failure_log.size());
  if (res.failures > 0 && res.failures > n / 100)
    throw std::runtime_error("Monte Carlo: " + std::to_string(res.failures) + " of " +
                             std::to_string(n) + " samples failed (> 1%)");
  res.sd.assign(snapshots, std::vector<double>(cells, 0.0));
  if (count > 1)
    for (int snap = 0; snap < snapshots; ++snap)
      for (int c = 0; c < cells; ++c)
        res.sd[snap][c] = std::sqrt(m2[snap][c] / (count - 1));
  return res;
}

}  // namespace sgflow::mc
