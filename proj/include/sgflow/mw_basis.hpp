#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sgflow::mw {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Number of multi-indices k in N_0^d with |k|_1 <= p, i.e. (p+d)!/(p!d!).
std::int64_t total_order_count(int p, int d);

/// All multi-indices with |k|_1 <= p in graded lexicographic order
/// (by total degree, then lexicographically).
std::vector<std::vector<int>> total_order_indices(int p, int d);

struct MwBasisSpec {
  int dims = 1;               ///< stochastic dimension count d
  int poly_degree = 0;        ///< N_p: piecewise polynomial degree (1D size rule)
  int resolution_levels = 0;  ///< N_r: wavelet resolution levels
  int total_order = 0;        ///< p: total-order truncation across dims (d >= 2)
  std::int64_t size_cap = 4096;

  /// Per-dimension polynomial degree of the underlying 1D family:
  /// N_p when d == 1, the total order p otherwise.
  int per_dim_degree() const { return dims == 1 ? poly_degree : total_order; }

  /// Basis size P = (N_p+1) 2^{N_r} in 1D, ((p+d)!/(p!d!)) 2^{N_r} in d dims.
  std::int64_t size() const;

  /// Throws std::invalid_argument / CapacityError on bad or oversized specs.
  void validate() const;
};

/// Orthonormal 1D family on [-1,1] under the uniform probability measure:
/// Legendre polynomials of degree 0..D plus the mother wavelets of the same
/// degrees, the latter orthogonal to every polynomial of degree <= D.
///
/// Mother wavelets are built by Gram-Schmidt on the 2(D+1)-dimensional space
/// of piecewise polynomials over {[-1,0),[0,1]}: the seeds sgn(xi) xi^i are
/// orthogonalized against the global Legendre block and then against each
/// other, in degree order, and signed so each wavelet is positive as xi->1-.
class Dim1Family {
 public:
  explicit Dim1Family(int degree, bool build_wavelets = true);

  int degree() const { return degree_; }

  /// Orthonormal Legendre of the given degree, value at xi.
  double eval_legendre(int deg, double xi) const;

  /// Mother wavelet of the given degree, value at xi in [-1,1].
  /// Right-continuous at the internal breakpoint xi = 0.
  double eval_mother(int deg, double xi) const;

  /// Coefficients of mother wavelet `deg` in the orthonormal half-interval
  /// Legendre representation; row 0 = left piece, row 1 = right piece.
  const Matrix& mother_coeffs() const { return mother_coeffs_; }

 private:
  int degree_;
  // (D+1) x 2(D+1): wavelet i = sum_n c(i,n) phi_n with phi_n the scaled
  // Legendre functions on the two half-intervals (left block first).
  Matrix mother_coeffs_;
};

/// Identity of one global basis function: block 0 is the smooth
/// (pure Legendre) block; block 2^j + k is the wavelet block at level j,
/// translate k, with all dimensions sharing the same (j,k). `degrees` is
/// the per-dimension polynomial degree multi-index.
struct MwIndex {
  int block = 0;
  std::vector<int> degrees;
  int level() const;      ///< wavelet level j; -1 for the smooth block
  int translate() const;  ///< translate k within the level; -1 for smooth
};

struct QuadratureRule {
  Matrix nodes;    ///< N_q x d points in [-1,1]^d
  Vector weights;  ///< probability weights, sum to 1
  int points_per_cell_per_dim = 0;
  int node_count() const { return static_cast<int>(weights.size()); }
};

/// Truncated multiwavelet basis over [-1,1]^d. Immutable after construction;
/// safe to read from many threads.
class MwBasis {
 public:
  static MwBasis build(const MwBasisSpec& spec);

  const MwBasisSpec& spec() const { return spec_; }
  int size() const { return size_; }
  int dims() const { return spec_.dims; }

  /// psi_m evaluated at xi (componentwise in [-1,1]). m is 0-based;
  /// psi_0 is the constant function 1.
  double eval(int m, std::span<const double> xi) const;
  double eval1d(int m, double xi) const;

  const MwIndex& index_of(int m) const { return index_[m]; }
  int global_index(const MwIndex& idx) const;

  /// Finest dyadic partition: cells per dimension (2^{N_r}).
  int cells_per_dim() const { return cells_per_dim_; }

  /// Support of function m at the finest dyadic level, as a half-open cell
  /// range [first, last) shared by every dimension.
  std::pair<int, int> support_cells(int m) const { return support_[m]; }

  const Dim1Family& family() const { return family_; }

  /// CSV dump of the index map and mother-wavelet coefficient table.
  void dump_csv(const std::string& path) const;

 private:
  MwBasisSpec spec_;
  int size_ = 0;
  int cells_per_dim_ = 1;
  Dim1Family family_;
  std::vector<MwIndex> index_;
  std::vector<std::pair<int, int>> support_;

  explicit MwBasis(const MwBasisSpec& spec);
};

/// Composite Gauss-Legendre rule over the finest dyadic partition,
/// (2 deg + 3) points per cell per dimension: exact for products of up to
/// four basis functions (per-piece degree 4 deg + 5 >= 4 N_p + 4).
QuadratureRule build_quadrature(const MwBasis& basis);

/// Single-cell tensorized Gauss-Legendre rule on [-1,1]^d (for smooth
/// integrands such as sampled velocities).
QuadratureRule tensor_gauss_rule(int points_per_dim, int dims);

/// Values of every basis function at every node: N_q x P.
Matrix tabulate_basis(const MwBasis& basis, const QuadratureRule& rule);

}  // namespace sgflow::mw
