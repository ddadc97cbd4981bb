#include "sgflow/random_fields.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sgflow/errors.hpp"

namespace sgflow::kl {

namespace {

double root_equation(double l, double L, double w) {
  return (l * l * w * w - 1.0) * std::sin(w * L) - 2.0 * l * w * std::cos(w * L);
}

// Composite Simpson weights for n uniformly spaced nodes. An odd interval
// count is handled with a 3/8 tail.
std::vector<double> simpson_weights(int n, double h) {
  if (n < 3) throw std::invalid_argument("Simpson weights need at least 3 nodes");
  std::vector<double> w(n, 0.0);
  int m = (n - 1) % 2 == 0 ? n : n - 3;  // nodes covered by plain Simpson
  if (m >= 3) {
    w[0] += h / 3.0;
    w[m - 1] += h / 3.0;
    for (int i = 1; i < m - 1; ++i) w[i] += (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
  }
  if (m != n) {
    if (n < 4) throw std::invalid_argument("Simpson weights need >= 4 nodes for odd intervals");
    const double c = 3.0 * h / 8.0;
    w[n - 4] += c;
    w[n - 3] += 3.0 * c;
    w[n - 2] += 3.0 * c;
    w[n - 1] += c;
  }
  return w;
}

}  // namespace

std::vector<double> exp_cov_roots_1d(double l, double L, int n) {
  if (!(l > 0.0) || !(L > 0.0))
    throw std::invalid_argument("correlation/domain length must be > 0");
  std::vector<double> roots;
  roots.reserve(n);
  const double step = M_PI / L;
  for (int m = 1; roots.size() < static_cast<std::size_t>(n); ++m) {
    double lo = (m - 1) * step + 1e-12 * step;
    double hi = m * step - 1e-12 * step;
    double flo = root_equation(l, L, lo), fhi = root_equation(l, L, hi);
    if (flo * fhi > 0.0) {
      // scan for an interior sign change before reporting failure
      const int scan = 64;
      bool found = false;
      double prevx = lo, prevf = flo;
      for (int s = 1; s <= scan; ++s) {
        double x = lo + (hi - lo) * s / scan;
        double fx = root_equation(l, L, x);
        if (prevf * fx <= 0.0) {
          lo = prevx;
          hi = x;
          flo = prevf;
          found = true;
          break;
        }
        prevx = x;
        prevf = fx;
      }
      if (!found)
        throw std::runtime_error("root bracketing failed in ((m-1)pi/L, m pi/L) for m = " +
                                 std::to_string(m) + ": f(lo) = " + std::to_string(flo) +
                                 ", f(hi) = " + std::to_string(fhi));
    }
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      double fm = root_equation(l, L, mid);
      if (flo * fm <= 0.0)
        hi = mid;
      else {
        lo = mid;
        flo = fm;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  return roots;
}

double exp_cov_eigenvalue_1d(double l, double sigma2, double omega) {
  return 2.0 * l * sigma2 / (1.0 + omega * omega * l * l);
}

double exp_cov_eigenfunction_1d(double l, double L, double omega, double x) {
  const double norm = std::sqrt((l * l * omega * omega + 1.0) * L / 2.0 + l);
  return (l * omega * std::cos(omega * x) + std::sin(omega * x)) / norm;
}

double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gaussian_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile argument outside (0,1)");
  double lo = -12.0, hi = 12.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (gaussian_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

XiMap XiMap::make(XiKind kind) {
  XiMap m;
  m.kind_ = kind;
  if (kind == XiKind::truncated_gaussian) {
    // scale s of the underlying Gaussian such that sZ truncated at +-3 has
    // unit variance; the endpoints still map to exactly +-3
    auto var = [](double s) {
      double c = 3.0 / s;
      double z = 2.0 * gaussian_cdf(c) - 1.0;
      double phi = std::exp(-0.5 * c * c) / std::sqrt(2.0 * M_PI);
      return s * s * (1.0 - 2.0 * c * phi / z);
    };
    double lo = 1.0, hi = 1.2;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (var(mid) < 1.0 ? lo : hi) = mid;
    }
    m.scale_ = 0.5 * (lo + hi);
  }
  return m;
}

double XiMap::operator()(double eta) const {
  if (kind_ == XiKind::uniform) return eta;
  if (eta <= -1.0) return -3.0;
  if (eta >= 1.0) return 3.0;
  const double c = 3.0 / scale_;
  const double plo = gaussian_cdf(-c), phi = gaussian_cdf(c);
  return scale_ * gaussian_quantile(plo + 0.5 * (eta + 1.0) * (phi - plo));
}

KlExpansion exp_cov_eigenpairs_2d(double lx, double ly, double sigma2, double Lx, double Ly,
                                  int d, int nx, int ny, int pool) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be > 0");
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  const auto wx = exp_cov_roots_1d(lx, Lx, pool);
  const auto wy = exp_cov_roots_1d(ly, Ly, pool);
  struct Cand {
    double lam;
    int ix, iy;
  };
  std::vector<Cand> cands;
  cands.reserve(std::size_t(pool) * pool);
  for (int i = 0; i < pool; ++i)
    for (int j = 0; j < pool; ++j)
      cands.push_back(
          {exp_cov_eigenvalue_1d(lx, 1.0, wx[i]) * exp_cov_eigenvalue_1d(ly, sigma2, wy[j]), i,
           j});
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.lam != b.lam) return a.lam > b.lam;
    if (a.ix != b.ix) return a.ix < b.ix;
    return a.iy < b.iy;
  });
  if (d > static_cast<int>(cands.size()))
    throw std::invalid_argument("d exceeds the candidate eigenpair pool");

  KlExpansion kl;
  kl.nx = nx;
  kl.ny = ny;
  kl.hx = Lx / nx;
  kl.hy = Ly / ny;
  kl.mean_x.assign(std::size_t(nx) * ny, 0.0);
  kl.eigenvalues.resize(d);
  kl.trace_estimate = sigma2 * Lx * Ly;
  for (int k = 0; k < d; ++k) {
    kl.eigenvalues[k] = cands[k].lam;
    Vector g(std::size_t(nx) * ny);
    const double ox = wx[cands[k].ix], oy = wy[cands[k].iy];
    for (int j = 0; j < ny; ++j) {
      const double y = (j + 0.5) * kl.hy;
      for (int i = 0; i < nx; ++i) {
        const double x = (i + 0.5) * kl.hx;
        g[kl.cell(i, j)] = exp_cov_eigenfunction_1d(lx, Lx, ox, x) *
                           exp_cov_eigenfunction_1d(ly, Ly, oy, y);
      }
    }
    kl.eig_x.push_back(std::move(g));
  }
  return kl;
}

double CovarianceTable::lookup(const Matrix& c, double lag1, double lag2) const {
  const double h1 = spacing1(), h2 = spacing2();
  const double f1 = (lag1 - r1.front()) / h1;
  const double f2 = (lag2 - r2.front()) / h2;
  const long i1 = std::lround(f1), i2 = std::lround(f2);
  if (i1 < 0 || i1 >= static_cast<long>(r1.size()) || std::abs(f1 - i1) > 1e-6)
    throw std::invalid_argument("covariance table does not cover lag r1 = " +
                                std::to_string(lag1));
  if (i2 < 0 || i2 >= static_cast<long>(r2.size()) || std::abs(f2 - i2) > 1e-6)
    throw std::invalid_argument("covariance table does not cover lag r2 = " +
                                std::to_string(lag2));
  return c(i1, i2);
}

CovarianceTable CovarianceTable::load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open covariance table " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty covariance table");
  struct Row {
    double r1, r2, cxx, cyy, cxy;
  };
  std::vector<Row> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Row row{};
    char comma;
    if (!(ss >> row.r1 >> comma >> row.r2 >> comma >> row.cxx >> comma >> row.cyy >> comma >>
          row.cxy))
      throw std::runtime_error("malformed covariance table row: " + line);
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("covariance table has no rows");
  std::vector<double> u1, u2;
  for (const auto& r : rows)
    if (u1.empty() || r.r1 > u1.back() + 1e-15) u1.push_back(r.r1);
  const std::size_t n2 = rows.size() / u1.size();
  for (std::size_t j = 0; j < n2; ++j) u2.push_back(rows[j].r2);
  CovarianceTable t;
  t.r1 = u1;
  t.r2 = u2;
  if (u1.size() * u2.size() != rows.size())
    throw std::runtime_error("covariance table is not a full row-major lag grid");
  auto check_uniform = [](const std::vector<double>& u, const char* name) {
    for (std::size_t k = 2; k < u.size(); ++k)
      if (std::abs((u[k] - u[k - 1]) - (u[1] - u[0])) > 1e-9 * std::abs(u[1] - u[0]))
        throw std::runtime_error(std::string("covariance table lag grid (") + name +
                                 ") is not uniform");
  };
  check_uniform(u1, "r1");
  check_uniform(u2, "r2");
  t.cxx.resize(u1.size(), u2.size());
  t.cyy.resize(u1.size(), u2.size());
  t.cxy.resize(u1.size(), u2.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::size_t i = k / u2.size(), j = k % u2.size();
    t.cxx(i, j) = rows[k].cxx;
    t.cyy(i, j) = rows[k].cyy;
    t.cxy(i, j) = rows[k].cxy;
  }
  return t;
}

void CovarianceTable::save_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write covariance table " + path);
  os << "r1,r2,cxx,cyy,cxy\n";
  os.precision(17);
  for (std::size_t i = 0; i < r1.size(); ++i)
    for (std::size_t j = 0; j < r2.size(); ++j)
      os << r1[i] << ',' << r2[j] << ',' << cxx(i, j) << ',' << cyy(i, j) << ',' << cxy(i, j)
         << '\n';
}

CovarianceTable CovarianceTable::separable_exponential(double lx, double ly, double sigma2,
                                                       double h1, double h2, int n1, int n2) {
  CovarianceTable t;
  for (int i = -(n1 - 1); i <= n1 - 1; ++i) t.r1.push_back(i * h1);
  for (int j = -(n2 - 1); j <= n2 - 1; ++j) t.r2.push_back(j * h2);
  const auto m1 = t.r1.size(), m2 = t.r2.size();
  t.cxx.resize(m1, m2);
  t.cyy.resize(m1, m2);
  t.cxy = Matrix::Zero(m1, m2);
  for (std::size_t i = 0; i < m1; ++i)
    for (std::size_t j = 0; j < m2; ++j) {
      // C_xx uses (lx, ly); C_yy the swapped lengths, so the two components
      // carry different anisotropy
      t.cxx(i, j) = sigma2 * std::exp(-std::abs(t.r1[i]) / lx - std::abs(t.r2[j]) / ly);
      t.cyy(i, j) = sigma2 * std::exp(-std::abs(t.r1[i]) / ly - std::abs(t.r2[j]) / lx);
    }
  return t;
}

CovarianceTable CovarianceTable::stream_function_gaussian(double lx, double ly, double sigma2,
                                                          double h1, double h2, int n1,
                                                          int n2) {
  CovarianceTable t;
  for (int i = -(n1 - 1); i <= n1 - 1; ++i) t.r1.push_back(i * h1);
  for (int j = -(n2 - 1); j <= n2 - 1; ++j) t.r2.push_back(j * h2);
  const auto m1 = t.r1.size(), m2 = t.r2.size();
  t.cxx.resize(m1, m2);
  t.cyy.resize(m1, m2);
  t.cxy.resize(m1, m2);
  const double lx2 = lx * lx, ly2 = ly * ly;
  for (std::size_t i = 0; i < m1; ++i) {
    for (std::size_t j = 0; j < m2; ++j) {
      const double a = t.r1[i], b = t.r2[j];
      const double e = sigma2 * std::exp(-0.5 * a * a / lx2 - 0.5 * b * b / ly2);
      // u = (d psi/dy, -d psi/dx) for a stream function psi with Gaussian
      // covariance: realizations are divergence-free
      t.cxx(i, j) = e * (1.0 / ly2 - b * b / (ly2 * ly2));
      t.cyy(i, j) = e * (1.0 / lx2 - a * a / (lx2 * lx2));
      t.cxy(i, j) = e * (a * b / (lx2 * ly2));
    }
  }
  return t;
}

KlExpansion gevp_simpson(const CovarianceTable& cov, int nx, int ny, double hx, double hy,
                         int d) {
  const int N = nx * ny;
  const int n = 2 * N;
  const auto wx = simpson_weights(nx, hx);
  const auto wy = simpson_weights(ny, hy);
  Vector w(N);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) w[i + nx * j] = wx[i] * wy[j];

  Matrix C(n, n);
  double trace = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = i + nx * j;
      for (int j2 = 0; j2 < ny; ++j2) {
        for (int i2 = 0; i2 < nx; ++i2) {
          const int col = i2 + nx * j2;
          const double lag1 = (i2 - i) * hx, lag2 = (j2 - j) * hy;
          C(row, col) = cov.lookup(cov.cxx, lag1, lag2);
          C(N + row, N + col) = cov.lookup(cov.cyy, lag1, lag2);
          C(row, N + col) = cov.lookup(cov.cxy, lag1, lag2);
          C(N + row, col) = cov.lookup(cov.cxy, -lag1, -lag2);
        }
      }
      trace += (C(row, row) + C(N + row, N + row)) * w[row];
    }
  }
  const double asym = (C - C.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(C.cwiseAbs().maxCoeff(), 1e-300);
  if (asym > 1e-10 * scale)
    throw std::invalid_argument(
        "assembled covariance operator is not symmetric; inconsistent table (max asymmetry " +
        std::to_string(asym) + ")");
  C = (0.5 * (C + C.transpose())).eval();

  Vector sw(n);
  for (int i = 0; i < N; ++i) sw[i] = sw[N + i] = std::sqrt(w[i]);
  const Matrix S = sw.asDiagonal() * C * sw.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalue solver failed");
  if (d < 1 || d > n) throw std::invalid_argument("retained term count out of range");

  KlExpansion out;
  out.nx = nx;
  out.ny = ny;
  out.hx = hx;
  out.hy = hy;
  out.mean_x.assign(N, 0.0);
  out.mean_y.assign(N, 0.0);
  out.trace_estimate = trace;
  out.eigenvalues.resize(d);
  for (int k = 0; k < d; ++k) {
    const double lam = es.eigenvalues()[n - 1 - k];
    if (!(lam > 0.0))
      throw std::runtime_error("requested " + std::to_string(d) +
                               " KL terms but the spectrum has only " + std::to_string(k) +
                               " positive eigenvalues");
    out.eigenvalues[k] = lam;
    const Vector h = es.eigenvectors().col(n - 1 - k);
    const Vector g = (h.array() / sw.array()).matrix();
    out.eig_x.emplace_back(g.head(N));
    out.eig_y.emplace_back(g.tail(N));
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> sample_field(const KlExpansion& kl,
                                                                 const Vector& xi) {
  if (xi.size() != kl.terms()) throw std::invalid_argument("xi has wrong dimension");
  std::vector<double> fx = kl.mean_x;
  std::vector<double> fy = kl.mean_y;
  for (int k = 0; k < kl.terms(); ++k) {
    const double s = std::sqrt(kl.eigenvalues[k]) * xi[k];
    for (std::size_t c = 0; c < fx.size(); ++c) fx[c] += s * kl.eig_x[k][c];
    if (kl.vector_valued())
      for (std::size_t c = 0; c < fy.size(); ++c) fy[c] += s * kl.eig_y[k][c];
  }
  return {std::move(fx), std::move(fy)};
}

}  // namespace sgflow::kl
