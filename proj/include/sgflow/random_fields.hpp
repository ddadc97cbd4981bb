#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace sgflow::kl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// First n positive roots of (l^2 w^2 - 1) sin(wL) = 2 l w cos(wL),
/// bracketed one per interval ((m-1)pi/L, m pi/L) and bisected.
std::vector<double> exp_cov_roots_1d(double l, double L, int n);

/// 1D eigenvalue of the exponential kernel for root w: 2 l sigma^2 / (1 + (wl)^2).
double exp_cov_eigenvalue_1d(double l, double sigma2, double omega);

/// 1D eigenfunction (lw cos(wx) + sin(wx)) normalized over [0, L].
double exp_cov_eigenfunction_1d(double l, double L, double omega, double x);

/// Distribution of the KL variables behind the uniform-measure basis:
/// either xi = eta (uniform on [-1,1]) or the inverse-CDF map of a Gaussian
/// truncated at +-3, rescaled so the truncated law has unit variance.
enum class XiKind { uniform, truncated_gaussian };

class XiMap {
 public:
  static XiMap make(XiKind kind);
  XiKind kind() const { return kind_; }
  /// maps eta in [-1,1] to the physical variable
  double operator()(double eta) const;

 private:
  XiKind kind_ = XiKind::uniform;
  double scale_ = 1.0;  // underlying Gaussian scale for unit truncated variance
};

double gaussian_cdf(double x);
double gaussian_quantile(double p);

/// Truncated KL expansion sampled on a uniform grid of cell centers.
/// Scalar fields use only the x-component slots.
struct KlExpansion {
  int nx = 0, ny = 1;
  double hx = 0.0, hy = 0.0;
  std::vector<double> mean_x, mean_y;  // mean field per component (size nx*ny)
  Vector eigenvalues;                  // sorted non-increasing, positive
  std::vector<Vector> eig_x, eig_y;    // eigenfunction values per retained term
  XiMap xi_map;
  double trace_estimate = 0.0;

  int terms() const { return static_cast<int>(eigenvalues.size()); }
  bool vector_valued() const { return !eig_y.empty(); }
  double energy_fraction() const {
    return trace_estimate > 0.0 ? eigenvalues.sum() / trace_estimate : 1.0;
  }
  int cell(int i, int j) const { return i + nx * j; }
};

/// Separable-exponential covariance eigenpairs on [0,Lx]x[0,Ly]: the d
/// largest products of the 1D eigenpairs, with tensor-product eigenfunctions
/// evaluated at the grid cell centers. `pool` 1D roots per dimension feed
/// the candidate products.
KlExpansion exp_cov_eigenpairs_2d(double lx, double ly, double sigma2, double Lx, double Ly,
                                  int d, int nx, int ny, int pool = 16);

/// Tabulated stationary matrix covariance on a uniform lag grid.
struct CovarianceTable {
  std::vector<double> r1, r2;  // sorted lag coordinates
  Matrix cxx, cyy, cxy;        // indexed [r1_index, r2_index]

  double spacing1() const { return r1.size() > 1 ? r1[1] - r1[0] : 1.0; }
  double spacing2() const { return r2.size() > 1 ? r2[1] - r2[0] : 1.0; }
  double lookup(const Matrix& c, double lag1, double lag2) const;

  static CovarianceTable load_csv(const std::string& path);
  void save_csv(const std::string& path) const;

  /// Diagonal separable-exponential blocks, zero cross term.
  static CovarianceTable separable_exponential(double lx, double ly, double sigma2, double h1,
                                               double h2, int n1, int n2);
  /// Divergence-free demo kernel: velocity covariance of a stream function
  /// with a Gaussian covariance (C_xx = -d2C/dr2^2 etc.).
  static CovarianceTable stream_function_gaussian(double lx, double ly, double sigma2,
                                                  double h1, double h2, int n1, int n2);
};

/// Vector-valued KL from the Simpson-discretized generalized eigenvalue
/// problem on nodes x_i = i hx, y_j = j hy (nx x ny nodes per component).
/// The assembled operator is symmetrized via sqrt-weight similarity; the d
/// largest eigenpairs are returned, bi-orthogonal under the Simpson inner
/// product.
KlExpansion gevp_simpson(const CovarianceTable& cov, int nx, int ny, double hx, double hy,
                         int d);

/// mean + sum_k sqrt(lambda_k) g_k xi_k on the grid. xi is the physical
/// variable (already mapped); components returned in the KlExpansion layout.
std::pair<std::vector<double>, std::vector<double>> sample_field(const KlExpansion& kl,
                                                                 const Vector& xi);

}  // namespace sgflow::kl
