#include "sgflow/mw_basis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sgflow/errors.hpp"

namespace sgflow::mw {

namespace {

// Gauss-Legendre nodes/weights on [-1,1]; weights sum to 2.
void gauss_legendre(int n, Vector& x, Vector& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0 = 0.0, p1 = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      p0 = 1.0;
      p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

// Standard Legendre polynomial P_n (P_n(1) = 1).
double legendre_std(int n, double xi) {
  if (n == 0) return 1.0;
  double p0 = 1.0, p1 = xi;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

int pow2(int j) { return 1 << j; }

}  // namespace

std::int64_t total_order_count(int p, int d) {
  std::int64_t c = 1;
  for (int i = 1; i <= d; ++i) c = c * (p + i) / i;
  return c;
}

std::vector<std::vector<int>> total_order_indices(int p, int d) {
  if (p < 0 || d < 0) throw std::invalid_argument("total_order_indices: p, d must be >= 0");
  std::vector<std::vector<int>> out;
  if (d == 0) {
    out.push_back({});
    return out;
  }
  std::vector<int> idx(d, 0);
  for (int total = 0; total <= p; ++total) {
    // lexicographic enumeration of all multi-indices with |k|_1 == total
    std::fill(idx.begin(), idx.end(), 0);
    idx[0] = total;
    while (true) {
      out.push_back(idx);
      // next composition of `total` in lex-descending first coordinate
      int pos = d - 2;
      while (pos >= 0 && idx[pos] == 0) --pos;
      if (pos < 0) break;
      --idx[pos];
      int rest = total;
      for (int i = 0; i <= pos; ++i) rest -= idx[i];
      for (int i = pos + 1; i < d; ++i) idx[i] = 0;
      idx[pos + 1] = rest;
    }
  }
  return out;
}

std::int64_t MwBasisSpec::size() const {
  return total_order_count(per_dim_degree(), dims) * pow2(resolution_levels);
}

void MwBasisSpec::validate() const {
  if (dims < 1) throw std::invalid_argument("basis spec: dims must be >= 1");
  if (poly_degree < 0) throw std::invalid_argument("basis spec: poly_degree must be >= 0");
  if (resolution_levels < 0)
    throw std::invalid_argument("basis spec: resolution_levels must be >= 0");
  if (total_order < 0) throw std::invalid_argument("basis spec: total_order must be >= 0");
  if (size() > size_cap)
    throw CapacityError("basis spec: P = " + std::to_string(size()) +
                        " exceeds size cap " + std::to_string(size_cap));
}

Dim1Family::Dim1Family(int degree, bool build_wavelets) : degree_(degree) {
  if (!build_wavelets) return;
  const int nb = degree + 1;       // functions per piece
  const int dim = 2 * nb;          // piecewise space dimension
  // Coordinates are taken in the orthonormal piecewise basis
  //   phi^-_n = sqrt(2) Le_n(2 xi + 1) on [-1,0),  phi^+_n on [0,1],
  // so Gram-Schmidt reduces to plain linear algebra on coordinate vectors.
  // GL rule exact for polynomials up to degree 2*degree + 1 per half.
  Vector gx, gw;
  gauss_legendre(degree + 2, gx, gw);

  auto half_coords = [&](auto&& f, bool left) {
    // <f, phi^{side}_n> for n = 0..degree
    Vector c(nb);
    for (int n = 0; n < nb; ++n) {
      double s = 0.0;
      for (int q = 0; q < gx.size(); ++q) {
        // map t in [-1,1] to xi in the half interval
        double xi = left ? 0.5 * (gx[q] - 1.0) : 0.5 * (gx[q] + 1.0);
        double phi = std::sqrt(2.0) * std::sqrt(2.0 * n + 1.0) * legendre_std(n, gx[q]);
        // d(xi)/2 with xi spanning width 1: jacobian 0.5 * (1/2)
        s += 0.25 * gw[q] * f(xi) * phi;
      }
      c[n] = s;
    }
    return c;
  };

  // Orthonormal global Legendre block in piecewise coordinates.
  Matrix basis(nb, dim);
  for (int i = 0; i < nb; ++i) {
    auto li = [i](double xi) { return std::sqrt(2.0 * i + 1.0) * legendre_std(i, xi); };
    basis.row(i).head(nb) = half_coords(li, true).transpose();
    basis.row(i).tail(nb) = half_coords(li, false).transpose();
  }

  mother_coeffs_.resize(nb, dim);
  Matrix accum(2 * nb, dim);  // rows: Legendre block, then finished wavelets
  accum.topRows(nb) = basis;
  int rows = nb;

  for (int i = 0; i < nb; ++i) {
    // seed sgn(xi) Le_i(xi): spans the same nested sequence as sgn(xi) xi^i
    // but stays well conditioned at higher degree
    auto seed = [i](double xi) {
      return (xi < 0.0 ? -1.0 : 1.0) * std::sqrt(2.0 * i + 1.0) * legendre_std(i, xi);
    };
    Vector v(dim);
    v.head(nb) = half_coords(seed, true);
    v.tail(nb) = half_coords(seed, false);
    for (int pass = 0; pass < 2; ++pass)
      for (int r = 0; r < rows; ++r) v -= accum.row(r).dot(v) * accum.row(r).transpose();
    double nrm = v.norm();
    if (nrm < 1e-10)
      throw std::runtime_error("mother wavelet construction: degenerate seed");
    v /= nrm;
    // sign: positive as xi -> 1^-  (value at 1 on the right piece)
    double at_one = 0.0;
    for (int n = 0; n < nb; ++n)
      at_one += v[nb + n] * std::sqrt(2.0) * std::sqrt(2.0 * n + 1.0);
    if (at_one < 0.0) v = -v;
    mother_coeffs_.row(i) = v.transpose();
    accum.row(rows++) = v.transpose();
  }
}

double Dim1Family::eval_legendre(int deg, double xi) const {
  return std::sqrt(2.0 * deg + 1.0) * legendre_std(deg, xi);
}

double Dim1Family::eval_mother(int deg, double xi) const {
  if (mother_coeffs_.rows() == 0)
    throw std::logic_error("mother wavelets were not built (resolution_levels == 0)");
  const int nb = degree_ + 1;
  const bool left = xi < 0.0;  // right-continuous at the breakpoint
  double t = left ? 2.0 * xi + 1.0 : 2.0 * xi - 1.0;
  double s = 0.0;
  for (int n = 0; n < nb; ++n) {
    double c = mother_coeffs_(deg, left ? n : nb + n);
    s += c * std::sqrt(2.0) * std::sqrt(2.0 * n + 1.0) * legendre_std(n, t);
  }
  return s;
}

int MwIndex::level() const {
  if (block == 0) return -1;
  int j = 0;
  while ((2 << j) <= block) ++j;
  return j;
}

int MwIndex::translate() const {
  if (block == 0) return -1;
  return block - pow2(level());
}

MwBasis::MwBasis(const MwBasisSpec& spec)
    : spec_(spec), family_(spec.per_dim_degree(), spec.resolution_levels > 0) {}

MwBasis MwBasis::build(const MwBasisSpec& spec) {
  spec.validate();
  MwBasis b(spec);
  b.size_ = static_cast<int>(spec.size());
  b.cells_per_dim_ = pow2(spec.resolution_levels);

  const auto degs = total_order_indices(spec.per_dim_degree(), spec.dims);
  const int blocks = pow2(spec.resolution_levels);
  b.index_.reserve(b.size_);
  b.support_.reserve(b.size_);
  for (int blk = 0; blk < blocks; ++blk) {
    int first = 0, last = b.cells_per_dim_;
    if (blk > 0) {
      MwIndex probe{blk, {}};
      int j = probe.level(), k = probe.translate();
      int span = b.cells_per_dim_ / pow2(j);
      first = k * span;
      last = first + span;
    }
    for (const auto& dg : degs) {
      b.index_.push_back(MwIndex{blk, dg});
      b.support_.emplace_back(first, last);
    }
  }
  return b;
}

double MwBasis::eval1d(int m, double xi) const {
  if (m < 0 || m >= size_) throw std::out_of_range("basis index out of range");
  if (xi < -1.0 || xi > 1.0) throw std::domain_error("basis evaluated outside [-1,1]");
  const MwIndex& idx = index_[m];
  const int deg = idx.degrees[0];
  if (idx.block == 0) return family_.eval_legendre(deg, xi);
  const int j = idx.level(), k = idx.translate();
  const double width = std::ldexp(2.0, -j);  // 2^{1-j}
  const double lo = -1.0 + k * width;
  const double hi = lo + width;
  const bool inside = (xi >= lo && xi < hi) || (hi == 1.0 && xi == 1.0);
  if (!inside) return 0.0;
  const double zeta = std::ldexp(xi + 1.0, j) - (2.0 * k + 1.0);
  return std::pow(2.0, 0.5 * j) * family_.eval_mother(deg, zeta);
}

double MwBasis::eval(int m, std::span<const double> xi) const {
  if (m < 0 || m >= size_) throw std::out_of_range("basis index out of range");
  if (static_cast<int>(xi.size()) != spec_.dims)
    throw std::invalid_argument("basis evaluation point has wrong dimension");
  const MwIndex& idx = index_[m];
  double v = 1.0;
  if (idx.block == 0) {
    for (int l = 0; l < spec_.dims; ++l) {
      double x = xi[l];
      if (x < -1.0 || x > 1.0) throw std::domain_error("basis evaluated outside [-1,1]^d");
      v *= family_.eval_legendre(idx.degrees[l], x);
    }
    return v;
  }
  const int j = idx.level(), k = idx.translate();
  const double width = std::ldexp(2.0, -j);
  const double lo = -1.0 + k * width;
  const double hi = lo + width;
  const double scale = std::pow(2.0, 0.5 * j);
  for (int l = 0; l < spec_.dims; ++l) {
    double x = xi[l];
    if (x < -1.0 || x > 1.0) throw std::domain_error("basis evaluated outside [-1,1]^d");
    const bool inside = (x >= lo && x < hi) || (hi == 1.0 && x == 1.0);
    if (!inside) return 0.0;
    const double zeta = std::ldexp(x + 1.0, j) - (2.0 * k + 1.0);
    v *= scale * family_.eval_mother(idx.degrees[l], zeta);
  }
  return v;
}

int MwBasis::global_index(const MwIndex& idx) const {
  const auto degs = total_order_indices(spec_.per_dim_degree(), spec_.dims);
  for (std::size_t r = 0; r < degs.size(); ++r) {
    if (degs[r] == idx.degrees)
      return idx.block * static_cast<int>(degs.size()) + static_cast<int>(r);
  }
  throw std::invalid_argument("global_index: degree multi-index not in basis");
}

QuadratureRule build_quadrature(const MwBasis& basis) {
  const int d = basis.dims();
  const int cells = basis.cells_per_dim();
  const int npts = 2 * basis.spec().per_dim_degree() + 3;
  Vector gx, gw;
  gauss_legendre(npts, gx, gw);

  const int n1 = cells * npts;
  Vector x1(n1), w1(n1);
  const double width = 2.0 / cells;
  for (int c = 0; c < cells; ++c) {
    const double lo = -1.0 + c * width;
    for (int q = 0; q < npts; ++q) {
      x1[c * npts + q] = lo + 0.5 * width * (gx[q] + 1.0);
      w1[c * npts + q] = 0.25 * width * gw[q];  // probability weight
    }
  }

  std::int64_t nq = 1;
  for (int l = 0; l < d; ++l) {
    nq *= n1;
    if (nq > (std::int64_t{1} << 24))
      throw CapacityError("quadrature rule would need " + std::to_string(nq) + " nodes");
  }

  QuadratureRule rule;
  rule.points_per_cell_per_dim = npts;
  rule.nodes.resize(nq, d);
  rule.weights.resize(nq);
  for (std::int64_t q = 0; q < nq; ++q) {
    std::int64_t rem = q;
    double w = 1.0;
    for (int l = d - 1; l >= 0; --l) {
      int i = static_cast<int>(rem % n1);
      rem /= n1;
      rule.nodes(q, l) = x1[i];
      w *= w1[i];
    }
    rule.weights[q] = w;
  }
  return rule;
}

QuadratureRule tensor_gauss_rule(int points_per_dim, int dims) {
  Vector gx, gw;
  gauss_legendre(points_per_dim, gx, gw);
  std::int64_t nq = 1;
  for (int l = 0; l < dims; ++l) nq *= points_per_dim;
  QuadratureRule rule;
  rule.points_per_cell_per_dim = points_per_dim;
  rule.nodes.resize(nq, dims);
  rule.weights.resize(nq);
  for (std::int64_t q = 0; q < nq; ++q) {
    std::int64_t rem = q;
    double w = 1.0;
    for (int l = dims - 1; l >= 0; --l) {
      int i = static_cast<int>(rem % points_per_dim);
      rem /= points_per_dim;
      rule.nodes(q, l) = gx[i];
      w *= 0.5 * gw[i];
    }
    rule.weights[q] = w;
  }
  return rule;
}

Matrix tabulate_basis(const MwBasis& basis, const QuadratureRule& rule) {
  const int nq = rule.node_count();
  const int P = basis.size();
  Matrix psi(nq, P);
  std::vector<double> pt(basis.dims());
  for (int q = 0; q < nq; ++q) {
    for (int l = 0; l < basis.dims(); ++l) pt[l] = rule.nodes(q, l);
    for (int m = 0; m < P; ++m) psi(q, m) = basis.eval(m, pt);
  }
  return psi;
}

void MwBasis::dump_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "index,block,level,translate,degrees\n";
  for (int m = 0; m < size_; ++m) {
    const auto& idx = index_[m];
    os << m << ',' << idx.block << ',' << idx.level() << ',' << idx.translate() << ",\"";
    for (std::size_t l = 0; l < idx.degrees.size(); ++l)
      os << (l ? " " : "") << idx.degrees[l];
    os << "\"\n";
  }
  os << "\nmother_wavelet,side,scaled_legendre_coefficients\n";
  const auto& mc = family_.mother_coeffs();
  const int nb = family_.degree() + 1;
  for (int i = 0; i < nb; ++i) {
    for (int side = 0; side < 2; ++side) {
      os << i << ',' << (side == 0 ? "left" : "right");
      for (int n = 0; n < nb; ++n) os << ',' << mc(i, side * nb + n);
      os << '\n';
    }
  }
}

}  // namespace sgflow::mw
