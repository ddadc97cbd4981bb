#include "sgflow/galerkin.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sgflow/errors.hpp"

namespace sgflow::galerkin {

namespace {

std::uint64_t key3(int i, int j, int k) {
  return (std::uint64_t(i) << 42) | (std::uint64_t(j) << 21) | std::uint64_t(k);
}

std::uint64_t key4(int h, int i, int j, int k) {
  return (std::uint64_t(h) << 48) | (std::uint64_t(i) << 32) | (std::uint64_t(j) << 16) |
         std::uint64_t(k);
}

double lookup(const std::vector<std::pair<std::uint64_t, double>>& table, std::uint64_t key) {
  auto it = std::lower_bound(table.begin(), table.end(), key,
                             [](const auto& e, std::uint64_t k) { return e.first < k; });
  return (it != table.end() && it->first == key) ? it->second : 0.0;
}

}  // namespace

ProductTensors ProductTensors::build(const MwBasis& basis, const QuadratureRule& rule,
                                     double drop_tol, std::int64_t quad_nnz_cap,
                                     ExecMode mode) {
  const auto t0 = std::chrono::steady_clock::now();
  ProductTensors t;
  const int P = basis.size();
  t.P_ = P;
  t.drop_tol_ = drop_tol;

  const Matrix psi = mw::tabulate_basis(basis, rule);
  const Vector& w = rule.weights;
  const int nq = rule.node_count();
  const bool contiguous_support = basis.dims() == 1;
  const int npts = rule.points_per_cell_per_dim;

  auto support = [&](int m) { return basis.support_cells(m); };
  auto shared_range = [&](std::initializer_list<int> ms, int& lo, int& hi) {
    lo = 0;
    hi = basis.cells_per_dim();
    for (int m : ms) {
      auto [a, b] = support(m);
      lo = std::max(lo, a);
      hi = std::min(hi, b);
    }
    return lo < hi;
  };

  // quadrature of a product of tabulated columns over the shared support
  auto integrate3 = [&](int i, int j, int k, int lo, int hi) {
    double s = 0.0;
    int q0 = contiguous_support ? lo * npts : 0;
    int q1 = contiguous_support ? hi * npts : nq;
    for (int q = q0; q < q1; ++q) s += w[q] * psi(q, i) * psi(q, j) * psi(q, k);
    return s;
  };
  auto integrate4 = [&](int h, int i, int j, int k, int lo, int hi) {
    double s = 0.0;
    int q0 = contiguous_support ? lo * npts : 0;
    int q1 = contiguous_support ? hi * npts : nq;
    for (int q = q0; q < q1; ++q) s += w[q] * psi(q, h) * psi(q, i) * psi(q, j) * psi(q, k);
    return s;
  };

  // --- triple tensor, canonical i <= j <= k, grouped by i for determinism ---
  std::vector<std::vector<std::pair<std::uint64_t, double>>> tri_by_i(P);
  parallel_for(P, mode, [&](int i) {
    for (int j = i; j < P; ++j) {
      for (int k = j; k < P; ++k) {
        int lo, hi;
        if (!shared_range({i, j, k}, lo, hi)) continue;
        double v = integrate3(i, j, k, lo, hi);
        if (std::abs(v) > drop_tol) tri_by_i[i].push_back({key3(i, j, k), v});
      }
    }
  });
  for (const auto& bucket : tri_by_i)
    t.triple_canon_.insert(t.triple_canon_.end(), bucket.begin(), bucket.end());
  t.stats_.triple_nnz = static_cast<std::int64_t>(t.triple_canon_.size());

  // --- quadruple tensor, canonical h <= i <= j <= k ---
  std::int64_t tuple_count = std::int64_t(P) * (P + 1) / 2 * (P + 2) / 3 * (P + 3) / 4;
  if (tuple_count > (std::int64_t{1} << 31)) {
    t.stats_.quad_available = false;
  } else {
    std::vector<std::vector<std::pair<std::uint64_t, double>>> quad_by_h(P);
    parallel_for(P, mode, [&](int h) {
      for (int i = h; i < P; ++i) {
        for (int j = i; j < P; ++j) {
          for (int k = j; k < P; ++k) {
            int lo, hi;
            if (!shared_range({h, i, j, k}, lo, hi)) continue;
            double v = integrate4(h, i, j, k, lo, hi);
            if (std::abs(v) > drop_tol) quad_by_h[h].push_back({key4(h, i, j, k), v});
          }
        }
      }
    });
    std::int64_t nnz = 0;
    for (const auto& bucket : quad_by_h) nnz += static_cast<std::int64_t>(bucket.size());
    if (nnz > quad_nnz_cap) {
      t.stats_.quad_available = false;
      t.stats_.quad_nnz = nnz;
    } else {
      for (const auto& bucket : quad_by_h)
        t.quad_canon_.insert(t.quad_canon_.end(), bucket.begin(), bucket.end());
      t.stats_.quad_nnz = nnz;
    }
  }

  // --- role-grouped expansions ---
  t.triple_slices_.assign(P, {});
  for (const auto& [key, v] : t.triple_canon_) {
    int i = int(key >> 42), j = int((key >> 21) & 0x1fffff), k = int(key & 0x1fffff);
    int tuple[3] = {i, j, k};
    for (int r = 0; r < 3; ++r) {
      if (r > 0 && tuple[r] == tuple[r - 1]) continue;  // distinct roles only
      int rest[2];
      for (int s = 0, q = 0; s < 3; ++s)
        if (s != r) rest[q++] = tuple[s];
      t.triple_slices_[tuple[r]].push_back({std::min(rest[0], rest[1]),
                                            std::max(rest[0], rest[1]), v});
    }
  }

  if (t.stats_.quad_available) {
    t.quad_pair_slices_.assign(std::size_t(P) * (P + 1) / 2, {});
    constexpr int splits[6][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2},
                                  {1, 2, 0, 3}, {1, 3, 0, 2}, {2, 3, 0, 1}};
    for (const auto& [key, v] : t.quad_canon_) {
      int tuple[4] = {int(key >> 48), int((key >> 32) & 0xffff), int((key >> 16) & 0xffff),
                      int(key & 0xffff)};
      std::uint64_t seen[6];
      int nseen = 0;
      for (const auto& sp : splits) {
        int h = tuple[sp[0]], i = tuple[sp[1]];
        int j = tuple[sp[2]], k = tuple[sp[3]];
        if (h > i) std::swap(h, i);
        if (j > k) std::swap(j, k);
        std::uint64_t sig = key4(h, i, j, k);
        bool dup = false;
        for (int s = 0; s < nseen; ++s) dup |= (seen[s] == sig);
        if (dup) continue;
        seen[nseen++] = sig;
        t.quad_pair_slices_[t.pair_index(h, i)].push_back({j, k, v});
      }
    }
  }

  t.stats_.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

double ProductTensors::triple(int i, int j, int k) const {
  int a[3] = {i, j, k};
  std::sort(a, a + 3);
  return lookup(triple_canon_, key3(a[0], a[1], a[2]));
}

double ProductTensors::quad(int h, int i, int j, int k) const {
  if (!stats_.quad_available)
    throw CapacityError("quadruple tensor unavailable (nonzero cap exceeded); use flux mode trip");
  int a[4] = {h, i, j, k};
  std::sort(a, a + 4);
  return lookup(quad_canon_, key4(a[0], a[1], a[2], a[3]));
}

const std::vector<ProductTensors::Entry>& ProductTensors::quad_pair_slice(int h, int i) const {
  if (!stats_.quad_available)
    throw CapacityError("quadruple tensor unavailable (nonzero cap exceeded); use flux mode trip");
  return quad_pair_slices_[pair_index(h, i)];
}

Matrix ProductTensors::product_matrix(const Vector& a, OpCounters* ops) const {
  Matrix M = Matrix::Zero(P_, P_);
  std::uint64_t macc = 0;
  for (int i = 0; i < P_; ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (const Entry& e : triple_slices_[i]) {
      M(e.j, e.k) += ai * e.value;
      ++macc;
    }
  }
  for (int j = 0; j < P_; ++j)
    for (int k = j + 1; k < P_; ++k) M(k, j) = M(j, k);
  if (ops) ops->macc += macc;
  return M;
}

Matrix ProductTensors::product_matrix(const Vector& a, const Vector& b, OpCounters* ops) const {
  if (!stats_.quad_available)
    throw CapacityError("quadruple tensor unavailable (nonzero cap exceeded); use flux mode trip");
  Matrix M = Matrix::Zero(P_, P_);
  std::uint64_t macc = 0;
  for (int h = 0; h < P_; ++h) {
    for (int i = h; i < P_; ++i) {
      const auto& slice = quad_pair_slices_[pair_index(h, i)];
      if (slice.empty()) continue;
      double g = a[h] * b[i];
      if (h < i) g += a[i] * b[h];
      macc += 2;
      if (g == 0.0) continue;
      for (const Entry& e : slice) {
        M(e.j, e.k) += g * e.value;
        ++macc;
      }
    }
  }
  for (int j = 0; j < P_; ++j)
    for (int k = j + 1; k < P_; ++k) M(k, j) = M(j, k);
  if (ops) ops->macc += macc;
  return M;
}

Vector ProductTensors::galerkin_product(const Vector& a, const Vector& b, OpCounters* ops) const {
  Vector out = Vector::Zero(P_);
  std::uint64_t macc = 0;
  for (int i = 0; i < P_; ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (const Entry& e : triple_slices_[i]) {
      out[e.j] += ai * e.value * b[e.k];
      ++macc;
      if (e.j != e.k) {
        out[e.k] += ai * e.value * b[e.j];
        ++macc;
      }
    }
  }
  if (ops) ops->macc += macc;
  return out;
}

Vector ProductTensors::galerkin_product(const Vector& a, const Vector& b, const Vector& c,
                                        OpCounters* ops) const {
  if (!stats_.quad_available)
    throw CapacityError("quadruple tensor unavailable (nonzero cap exceeded); use flux mode trip");
  Vector out = Vector::Zero(P_);
  std::uint64_t macc = 0;
  for (int h = 0; h < P_; ++h) {
    for (int i = h; i < P_; ++i) {
      const auto& slice = quad_pair_slices_[pair_index(h, i)];
      if (slice.empty()) continue;
      double g = a[h] * b[i];
      if (h < i) g += a[i] * b[h];
      macc += 2;
      if (g == 0.0) continue;
      for (const Entry& e : slice) {
        out[e.j] += g * e.value * c[e.k];
        ++macc;
        if (e.j != e.k) {
          out[e.k] += g * e.value * c[e.j];
          ++macc;
        }
      }
    }
  }
  if (ops) ops->macc += macc;
  return out;
}

}  // namespace sgflow::galerkin
