#include "sgflow/transport.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sgflow/errors.hpp"

namespace sgflow::transport {

namespace {

using reduced::ReducedIndexSet;
using reduced::significant_indices;

// Denominator matrix B(S,S) + a B(1-S,1-S), reduced when eps > 0.
Matrix denominator_matrix(const Vector& S, const FluxParams& p, const ProductTensors& t,
                          OpCounters* ops) {
  const Vector one_minus = unit_vector(t.size()) - S;
  if (p.epsilon > 0.0) {
    const ReducedIndexSet js = significant_indices(S, p.epsilon);
    const ReducedIndexSet jm = significant_indices(one_minus, p.epsilon);
    Matrix M = reduced_product_matrix(t, S, js, S, js, ops);
    M += p.viscosity_ratio * reduced_product_matrix(t, one_minus, jm, one_minus, jm, ops);
    return M;
  }
  Matrix M = t.product_matrix(S, S, ops);
  M += p.viscosity_ratio * t.product_matrix(one_minus, one_minus, ops);
  return M;
}

// Right-hand side B(S,S) u, reduced when eps > 0.
Vector numerator_vector(const Vector& S, const Vector& u, const FluxParams& p,
                        const ProductTensors& t, OpCounters* ops) {
  if (p.epsilon > 0.0) {
    const ReducedIndexSet js = significant_indices(S, p.epsilon);
    const ReducedIndexSet ju = significant_indices(u, p.epsilon);
    return reduced_product(t, S, js, S, js, u, ju, ops);
  }
  return t.galerkin_product(S, S, u, ops);
}

// Cholesky with the error taxonomy shared by all flux solves.
Eigen::LLT<Matrix> factor_spd(const Matrix& M) {
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() == Eigen::Success) return llt;
  // not SPD: recover the smallest pivot for diagnostics
  Eigen::LDLT<Matrix> ldlt(M);
  const double smallest = ldlt.vectorD().minCoeff();
  const double scale = M.cwiseAbs().maxCoeff();
  if (!(std::abs(smallest) > 1e-14 * std::max(scale, 1.0)))
    throw SingularSystemError("Galerkin flux matrix is singular");
  throw HyperbolicityRiskError("Galerkin flux matrix is not positive definite", smallest);
}

}  // namespace

double frac_flow(double s, double a) {
  const double num = s * s;
  const double den = num + a * (1.0 - s) * (1.0 - s);
  if (den == 0.0) return 0.0;
  return num / den;
}

double frac_flow_deriv(double s, double a) {
  const double den = s * s + a * (1.0 - s) * (1.0 - s);
  return 2.0 * a * s * (1.0 - s) / (den * den);
}

double max_frac_flow_deriv(double a) {
  double lo = 0.0, hi = 1.0;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = frac_flow_deriv(x1, a), f2 = frac_flow_deriv(x2, a);
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = frac_flow_deriv(x2, a);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = frac_flow_deriv(x1, a);
    }
  }
  return std::max(f1, f2);
}

ShockInfo shock_saturation(double a) {
  if (!(a > 0.0)) throw std::invalid_argument("shock_saturation: a must be positive");
  const double s_star = std::sqrt(a / (1.0 + a));
  return {s_star, frac_flow_deriv(s_star, a)};
}

Vector unit_vector(int P) {
  Vector e = Vector::Zero(P);
  e[0] = 1.0;
  return e;
}

Vector sg_flux_quad(const Vector& S, const Vector& u, const FluxParams& p,
                    const ProductTensors& t, OpCounters* ops) {
  const Matrix M = denominator_matrix(S, p, t, ops);
  const Vector rhs = numerator_vector(S, u, p, t, ops);
  return factor_spd(M).solve(rhs);
}

Vector sg_flux_trip(const Vector& S, const Vector& u, const FluxParams& p,
                    const ProductTensors& t, OpCounters* ops) {
  const int P = t.size();
  const Vector one_minus = unit_vector(P) - S;
  Vector dvec, num;
  if (p.epsilon > 0.0) {
    const ReducedIndexSet js = significant_indices(S, p.epsilon);
    const ReducedIndexSet jm = significant_indices(one_minus, p.epsilon);
    num = reduced_product(t, S, js, S, js, ops);
    dvec = num + p.viscosity_ratio * reduced_product(t, one_minus, jm, one_minus, jm, ops);
  } else {
    num = t.galerkin_product(S, S, ops);
    dvec = num + p.viscosity_ratio * t.galerkin_product(one_minus, one_minus, ops);
  }
  Matrix M;
  if (p.epsilon > 0.0) {
    const ReducedIndexSet jd = significant_indices(dvec, p.epsilon);
    M = reduced_product_matrix(t, dvec, jd, ops);
  } else {
    M = t.product_matrix(dvec, ops);
  }
  const Vector g = factor_spd(M).solve(num);
  if (p.epsilon > 0.0) {
    const ReducedIndexSet ju = significant_indices(u, p.epsilon);
    const ReducedIndexSet jg = significant_indices(g, p.epsilon);
    return reduced_product(t, u, ju, g, jg, ops);
  }
  return t.galerkin_product(u, g, ops);
}

Vector sg_flux(const Vector& S, const Vector& u, const FluxParams& p, const ProductTensors& t,
               OpCounters* ops) {
  return p.mode == FluxMode::quad ? sg_flux_quad(S, u, p, t, ops)
                                  : sg_flux_trip(S, u, p, t, ops);
}

Vector sg_frac_flow_coeffs(const Vector& S, const FluxParams& p, const ProductTensors& t,
                           OpCounters* ops) {
  return sg_flux(S, unit_vector(t.size()), p, t, ops);
}

Matrix flux_jacobian(const Vector& S, const Vector& u, const FluxParams& p,
                     const ProductTensors& t) {
  const int P = t.size();
  const Vector one_minus = unit_vector(P) - S;
  const Matrix M = denominator_matrix(S, p, t, nullptr);
  const auto llt = factor_spd(M);
  const Vector w = llt.solve(numerator_vector(S, u, p, t, nullptr));
  const Vector lhs_arg = p.viscosity_ratio * one_minus - S;
  Matrix M2;
  if (p.epsilon > 0.0) {
    const ReducedIndexSet jl = significant_indices(lhs_arg, p.epsilon);
    const ReducedIndexSet jw = significant_indices(w, p.epsilon);
    const ReducedIndexSet js = significant_indices(S, p.epsilon);
    const ReducedIndexSet ju = significant_indices(u, p.epsilon);
    M2 = reduced_product_matrix(t, lhs_arg, jl, w, jw, nullptr);
    M2 += reduced_product_matrix(t, S, js, u, ju, nullptr);
  } else {
    M2 = t.product_matrix(lhs_arg, w);
    M2 += t.product_matrix(S, u);
  }
  return 2.0 * llt.solve(M2);
}

namespace {

// min/max eigenvalues of M1 M2 with M1 = 2 M^{-1} SPD, via the symmetric
// similarity G^{1/2} M2 G^{1/2}.
std::pair<double, double> jacobian_spectrum_bounds(const Matrix& M, const Matrix& M2) {
  const int P = static_cast<int>(M.rows());
  if (P <= 64) {
    Eigen::SelfAdjointEigenSolver<Matrix> es_m(M);
    const Vector d = es_m.eigenvalues();
    if (d.minCoeff() <= 0.0)
      throw HyperbolicityRiskError("wave-speed estimate: denominator not SPD", d.minCoeff());
    const Matrix ghalf =
        es_m.eigenvectors() * (2.0 / d.array()).sqrt().matrix().asDiagonal() *
        es_m.eigenvectors().transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es_j(ghalf * M2 * ghalf,
                                               Eigen::EigenvaluesOnly);
    return {es_j.eigenvalues().minCoeff(), es_j.eigenvalues().maxCoeff()};
  }
  // Large P: Gershgorin on M2, Gershgorin upper bound on M, and a few
  // inverse-power iterations for the smallest eigenvalue of M.
  double lo2 = std::numeric_limits<double>::max(), hi2 = std::numeric_limits<double>::lowest();
  double hiM = std::numeric_limits<double>::lowest();
  for (int i = 0; i < P; ++i) {
    double r2 = M2.row(i).cwiseAbs().sum() - std::abs(M2(i, i));
    lo2 = std::min(lo2, M2(i, i) - r2);
    hi2 = std::max(hi2, M2(i, i) + r2);
    double rM = M.row(i).cwiseAbs().sum() - std::abs(M(i, i));
    hiM = std::max(hiM, M(i, i) + rM);
  }
  const auto llt = factor_spd(M);
  Vector v = Vector::Ones(P).normalized();
  double lam_min = hiM;
  for (int it = 0; it < 12; ++it) {
    v = llt.solve(v);
    v.normalize();
    lam_min = v.dot(M * v);
  }
  lam_min *= 0.9;  // inverse iteration approaches from above
  const double m1_hi = 2.0 / lam_min;
  const double m1_lo = 2.0 / hiM;
  double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
  for (double m1 : {m1_lo, m1_hi}) {
    for (double m2 : {lo2, hi2}) {
      lo = std::min(lo, m1 * m2);
      hi = std::max(hi, m1 * m2);
    }
  }
  return {lo, hi};
}

std::pair<double, double> state_bounds(const Vector& S, const Vector& u, const FluxParams& p,
                                       const ProductTensors& t) {
  const int P = t.size();
  const Vector one_minus = unit_vector(P) - S;
  const Matrix M = denominator_matrix(S, p, t, nullptr);
  const auto llt = factor_spd(M);
  const Vector w = llt.solve(numerator_vector(S, u, p, t, nullptr));
  const Vector lhs_arg = p.viscosity_ratio * one_minus - S;
  Matrix M2;
  if (p.epsilon > 0.0) {
    const ReducedIndexSet jl = significant_indices(lhs_arg, p.epsilon);
    const ReducedIndexSet jw = significant_indices(w, p.epsilon);
    const ReducedIndexSet js = significant_indices(S, p.epsilon);
    const ReducedIndexSet ju = significant_indices(u, p.epsilon);
    M2 = reduced_product_matrix(t, lhs_arg, jl, w, jw, nullptr);
    M2 += reduced_product_matrix(t, S, js, u, ju, nullptr);
  } else {
    M2 = t.product_matrix(lhs_arg, w);
    M2 += t.product_matrix(S, u);
  }
  return jacobian_spectrum_bounds(M, M2);
}

}  // namespace

std::pair<double, double> wave_speed_bounds(const Vector& S_left, const Vector& S_right,
                                            const Vector& u, const FluxParams& p,
                                            const ProductTensors& t) {
  auto [lo_l, hi_l] = state_bounds(S_left, u, p, t);
  double lo = lo_l, hi = hi_l;
  if (&S_left != &S_right && S_left != S_right) {
    auto [lo_r, hi_r] = state_bounds(S_right, u, p, t);
    lo = std::min(lo, lo_r);
    hi = std::max(hi, hi_r);
  }
  lo -= 0.05 * std::abs(lo);
  hi += 0.05 * std::abs(hi);
  if (lo > hi) std::swap(lo, hi);
  return {lo, hi};
}

HyperbolicityReport hyperbolicity_check(const Vector& S, const FluxParams& p,
                                        const ProductTensors& t) {
  return hyperbolicity_check(S, unit_vector(t.size()), p, t);
}

HyperbolicityReport hyperbolicity_check(const Vector& S, const Vector& u, const FluxParams& p,
                                        const ProductTensors& t) {
  HyperbolicityReport rep;
  FluxParams full = p;
  full.epsilon = 0.0;  // diagnostics always use the full operators
  const Matrix M = denominator_matrix(S, full, t, nullptr);
  rep.max_asymmetry = (M - M.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  rep.min_denominator_eig = es.eigenvalues().minCoeff();
  rep.spd = rep.min_denominator_eig > 0.0;
  rep.max_imag_eig = std::numeric_limits<double>::quiet_NaN();
  Eigen::LDLT<Matrix> ldlt(M);
  const double scale = M.cwiseAbs().maxCoeff();
  const bool invertible = ldlt.info() == Eigen::Success &&
                          ldlt.vectorD().cwiseAbs().minCoeff() > 1e-14 * std::max(scale, 1.0);
  if (invertible) {
    const int P = t.size();
    const Vector one_minus = unit_vector(P) - S;
    const Vector w = ldlt.solve(t.galerkin_product(S, S, u));
    Matrix M2 = t.product_matrix(full.viscosity_ratio * one_minus - S, w);
    M2 += t.product_matrix(S, u);
    const Matrix J = 2.0 * ldlt.solve(M2);
    Eigen::EigenSolver<Matrix> ej(J, /*computeEigenvectors=*/false);
    rep.max_imag_eig = ej.eigenvalues().imag().cwiseAbs().maxCoeff();
  }
  return rep;
}

}  // namespace sgflow::transport
