#include "sgflow/pressure.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sgflow/errors.hpp"

namespace sgflow::pressure {

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

}  // namespace

PressureSolution solve_pressure(const PressureProblem& pr) {
  const int n = pr.mx * pr.my;
  if (static_cast<int>(pr.perm.size()) != n)
    throw std::invalid_argument("permeability field does not match the grid");
  for (double k : pr.perm)
    if (!(k > 0.0)) throw std::invalid_argument("permeability must be positive");
  double total = 0.0;
  for (const auto& [c, q] : pr.sources) total += q;
  if (std::abs(total) > 1e-12)
    throw std::invalid_argument("source rates must sum to zero (incompressibility)");

  auto cell = [&](int i, int j) { return i + pr.mx * j; };
  const bool is1d = pr.my == 1;
  const double ty_len = is1d ? 1.0 : pr.dy;  // transverse extent of x-faces

  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> trips;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (const auto& [c, q] : pr.sources) b[c] += q;

  auto add_face = [&](int c1, int c2, double trans) {
    trips.emplace_back(c1, c1, trans);
    trips.emplace_back(c2, c2, trans);
    trips.emplace_back(c1, c2, -trans);
    trips.emplace_back(c2, c1, -trans);
  };
  for (int j = 0; j < pr.my; ++j)
    for (int i = 1; i < pr.mx; ++i)
      add_face(cell(i - 1, j), cell(i, j),
               harmonic(pr.perm[cell(i - 1, j)], pr.perm[cell(i, j)]) * ty_len / pr.dx);
  for (int j = 1; j < pr.my; ++j)
    for (int i = 0; i < pr.mx; ++i)
      add_face(cell(i, j - 1), cell(i, j),
               harmonic(pr.perm[cell(i, j - 1)], pr.perm[cell(i, j)]) * pr.dx / pr.dy);

  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());

  // eliminate the gauge cell: solve the (n-1)x(n-1) SPD block
  Eigen::SparseMatrix<double> Ar = A.bottomRightCorner(n - 1, n - 1);
  Eigen::VectorXd br = b.tail(n - 1);
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(1e-13);
  cg.setMaxIterations(50 * n);
  cg.compute(Ar);
  Eigen::VectorXd pr_reduced = cg.solve(br);
  if (cg.info() != Eigen::Success) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Ar);
    if (ldlt.info() != Eigen::Success)
      throw SingularSystemError("pressure system is singular (disconnected transmissibility?)");
    pr_reduced = ldlt.solve(br);
  }

  PressureSolution sol;
  sol.p.assign(n, 0.0);
  for (int c = 1; c < n; ++c) sol.p[c] = pr_reduced[c - 1];

  Eigen::VectorXd pfull(n);
  for (int c = 0; c < n; ++c) pfull[c] = sol.p[c];
  const double bnorm = b.cwiseAbs().maxCoeff();
  sol.residual_inf = (A * pfull - b).cwiseAbs().maxCoeff() / std::max(bnorm, 1e-300);
  if (sol.residual_inf > 1e-10)
    throw std::runtime_error("pressure solve residual " + std::to_string(sol.residual_inf) +
                             " exceeds 1e-10");

  // face velocities (volumetric flux / face extent); no-flow boundaries
  sol.face_ux.assign(std::size_t(pr.mx + 1) * pr.my, 0.0);
  sol.face_uy.assign(std::size_t(pr.mx) * (pr.my + 1), 0.0);
  for (int j = 0; j < pr.my; ++j)
    for (int i = 1; i < pr.mx; ++i) {
      const double t = harmonic(pr.perm[cell(i - 1, j)], pr.perm[cell(i, j)]) / pr.dx;
      sol.face_ux[i + (pr.mx + 1) * j] = t * (sol.p[cell(i - 1, j)] - sol.p[cell(i, j)]);
    }
  for (int j = 1; j < pr.my; ++j)
    for (int i = 0; i < pr.mx; ++i) {
      const double t = harmonic(pr.perm[cell(i, j - 1)], pr.perm[cell(i, j)]) / pr.dy;
      sol.face_uy[i + pr.mx * j] = t * (sol.p[cell(i, j - 1)] - sol.p[cell(i, j)]);
    }

  // divergence check against the sources
  std::vector<double> src(n, 0.0);
  for (const auto& [c, q] : pr.sources) src[c] += q;
  const double vol = is1d ? pr.dx : pr.dx * pr.dy;
  for (int j = 0; j < pr.my; ++j)
    for (int i = 0; i < pr.mx; ++i) {
      double div = (sol.face_ux[i + 1 + (pr.mx + 1) * j] - sol.face_ux[i + (pr.mx + 1) * j]) *
                   ty_len;
      if (!is1d)
        div += (sol.face_uy[i + pr.mx * (j + 1)] - sol.face_uy[i + pr.mx * j]) * pr.dx;
      sol.max_divergence = std::max(sol.max_divergence,
                                    std::abs(div - src[cell(i, j)]) / std::max(bnorm, 1e-300));
      (void)vol;
    }
  return sol;
}

MwVelocityField project_velocity_mw(const VelocitySampler& sampler, const mw::MwBasis& basis,
                                    const mw::QuadratureRule& rule, const kl::XiMap& xi_map,
                                    const Grid& grid, ExecMode exec) {
  const int nq = rule.node_count();
  const int P = basis.size();
  const int d = basis.dims();
  const std::size_t nfx = std::size_t(grid.mx + 1) * grid.my;
  const std::size_t nfy = std::size_t(grid.mx) * (grid.my + 1);

  std::vector<std::vector<double>> sx(nq), sy(nq);
  std::vector<std::string> failures(nq);
  parallel_for(nq, exec, [&](int q) {
    Vector xi(d);
    for (int l = 0; l < d; ++l) xi[l] = xi_map(rule.nodes(q, l));
    try {
      auto [fx, fy] = sampler(xi);
      sx[q] = std::move(fx);
      sy[q] = std::move(fy);
    } catch (const std::exception& e) {
      std::string at = "(";
      for (int l = 0; l < d; ++l) at += (l ? "," : "") + std::to_string(xi[l]);
      failures[q] = std::string(e.what()) + " at xi = " + at + ")";
    }
  });
  for (int q = 0; q < nq; ++q)
    if (!failures[q].empty())
      throw std::runtime_error("velocity sampler failed: " + failures[q]);

  const mw::Matrix psi = mw::tabulate_basis(basis, rule);
  MwVelocityField out;
  out.ux.assign(nfx, Vector::Zero(P));
  out.uy.assign(nfy, Vector::Zero(P));
  for (int q = 0; q < nq; ++q) {  // fixed node order keeps runs identical
    if (sx[q].size() != nfx || sy[q].size() != nfy)
      throw std::runtime_error("velocity sampler returned arrays of wrong size");
    for (int m = 0; m < P; ++m) {
      const double wpsi = rule.weights[q] * psi(q, m);
      for (std::size_t f = 0; f < nfx; ++f) out.ux[f][m] += wpsi * sx[q][f];
      for (std::size_t f = 0; f < nfy; ++f) out.uy[f][m] += wpsi * sy[q][f];
    }
  }
  return out;
}

MwVelocityField uniform_mean_inflow_field(double u_mean, const kl::KlExpansion& klx,
                                          const mw::MwBasis& basis, const Grid& grid) {
  if (!klx.vector_valued())
    throw std::invalid_argument("inflow construction needs a vector-valued KL expansion");
  if (klx.nx != grid.mx || klx.ny != grid.my)
    throw std::invalid_argument("KL grid does not match the transport grid");
  const int d = basis.dims();
  if (klx.terms() != d)
    throw std::invalid_argument("KL term count must equal the basis dimension count");
  const int P = basis.size();

  // per-dimension moments <psi_part> and <T(eta) psi_part> over a matching
  // 1D family
  mw::MwBasisSpec s1;
  s1.dims = 1;
  s1.poly_degree = basis.spec().per_dim_degree();
  s1.resolution_levels = basis.spec().resolution_levels;
  const auto b1 = mw::MwBasis::build(s1);
  const auto r1 = mw::build_quadrature(b1);
  const auto psi1 = mw::tabulate_basis(b1, r1);
  Vector mu0(b1.size()), mu1(b1.size());
  for (int m = 0; m < b1.size(); ++m) {
    double m0 = 0.0, m1v = 0.0;
    for (int q = 0; q < r1.node_count(); ++q) {
      m0 += r1.weights[q] * psi1(q, m);
      m1v += r1.weights[q] * klx.xi_map(r1.nodes(q, 0)) * psi1(q, m);
    }
    mu0[m] = m0;
    mu1[m] = m1v;
  }

  const int per_block = b1.size() / (1 << s1.resolution_levels);
  auto part_index = [&](const mw::MwIndex& idx, int dim) {
    return idx.block * per_block + idx.degrees[dim];
  };

  std::vector<Vector> cx(grid.cells(), Vector::Zero(P));
  std::vector<Vector> cy(grid.cells(), Vector::Zero(P));
  for (int m = 0; m < P; ++m) {
    const auto& idx = basis.index_of(m);
    for (int l = 0; l < d; ++l) {
      double weight = mu1[part_index(idx, l)];
      for (int l2 = 0; l2 < d && weight != 0.0; ++l2)
        if (l2 != l) weight *= mu0[part_index(idx, l2)];
      if (weight == 0.0) continue;
      const double s = std::sqrt(klx.eigenvalues[l]) * weight;
      for (int c = 0; c < grid.cells(); ++c) {
        cx[c][m] += s * klx.eig_x[l][c];
        cy[c][m] += s * klx.eig_y[l][c];
      }
    }
  }
  for (int c = 0; c < grid.cells(); ++c) cx[c][0] += u_mean;
  return MwVelocityField::from_cell_centered(grid, cx, cy);
}

double max_realized_speed(const MwVelocityField& vel, const mw::MwBasis& basis,
                          const mw::QuadratureRule& rule) {
  const mw::Matrix psi = mw::tabulate_basis(basis, rule);
  double worst = 0.0;
  for (const auto* faces : {&vel.ux, &vel.uy})
    for (const auto& u : *faces)
      if (u.size() == psi.cols()) worst = std::max(worst, (psi * u).cwiseAbs().maxCoeff());
  return worst;
}

Vector project_scalar(const std::function<double(const Vector&)>& fn, const mw::MwBasis& basis,
                      const mw::QuadratureRule& rule) {
  const int P = basis.size();
  const mw::Matrix psi = mw::tabulate_basis(basis, rule);
  Vector out = Vector::Zero(P);
  Vector eta(basis.dims());
  for (int q = 0; q < rule.node_count(); ++q) {
    for (int l = 0; l < basis.dims(); ++l) eta[l] = rule.nodes(q, l);
    const double v = fn(eta);
    for (int m = 0; m < P; ++m) out[m] += rule.weights[q] * v * psi(q, m);
  }
  return out;
}

}  // namespace sgflow::pressure
