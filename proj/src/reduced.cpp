#include "sgflow/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace sgflow::reduced {

ReducedIndexSet significant_indices(const Vector& a, double eps) {
  ReducedIndexSet out;
  out.epsilon = eps;
  const int P = static_cast<int>(a.size());
  out.mask.assign(P, 0);
  out.indices.reserve(P);
  for (int j = 0; j < P; ++j) {
    if (std::abs(a[j]) > eps) {
      out.indices.push_back(j);
      out.mask[j] = 1;
    }
  }
  return out;
}

Matrix reduced_product_matrix(const ProductTensors& t, const Vector& a,
                              const ReducedIndexSet& ja, OpCounters* ops) {
  const int P = t.size();
  Matrix M = Matrix::Zero(P, P);
  std::uint64_t macc = 0;
  for (int i : ja.indices) {
    const double ai = a[i];
    for (const auto& e : t.triple_slice(i)) {
      M(e.j, e.k) += ai * e.value;
      ++macc;
    }
  }
  for (int j = 0; j < P; ++j)
    for (int k = j + 1; k < P; ++k) M(k, j) = M(j, k);
  if (ops) ops->macc += macc;
  return M;
}

namespace {

// Sorted union of two retained index sets; pair loops run over the union so
// the work scales with the retained counts, not with P.
std::vector<int> index_union(const ReducedIndexSet& ja, const ReducedIndexSet& jb) {
  std::vector<int> u;
  u.reserve(ja.indices.size() + jb.indices.size());
  std::set_union(ja.indices.begin(), ja.indices.end(), jb.indices.begin(), jb.indices.end(),
                 std::back_inserter(u));
  return u;
}

}  // namespace

Matrix reduced_product_matrix(const ProductTensors& t, const Vector& a,
                              const ReducedIndexSet& ja, const Vector& b,
                              const ReducedIndexSet& jb, OpCounters* ops) {
  const int P = t.size();
  Matrix M = Matrix::Zero(P, P);
  std::uint64_t macc = 0;
  const std::vector<int> u = index_union(ja, jb);
  const int nu = static_cast<int>(u.size());
  for (int hi = 0; hi < nu; ++hi) {
    const int h = u[hi];
    const bool ha = ja.contains(h), hb = jb.contains(h);
    for (int ii = hi; ii < nu; ++ii) {
      const int i = u[ii];
      // ordered restriction: h in J_a with i in J_b, plus the swapped roles
      double g = 0.0;
      if (ha && jb.contains(i)) g += a[h] * b[i];
      if (h < i && ja.contains(i) && hb) g += a[i] * b[h];
      if (g == 0.0) continue;
      macc += 2;
      for (const auto& e : t.quad_pair_slice(h, i)) {
        M(e.j, e.k) += g * e.value;
        ++macc;
      }
    }
  }
  for (int j = 0; j < P; ++j)
    for (int k = j + 1; k < P; ++k) M(k, j) = M(j, k);
  if (ops) ops->macc += macc;
  return M;
}

Vector reduced_product(const ProductTensors& t, const Vector& a, const ReducedIndexSet& ja,
                       const Vector& b, const ReducedIndexSet& jb, OpCounters* ops) {
  const int P = t.size();
  Vector out = Vector::Zero(P);
  std::uint64_t macc = 0;
  for (int i : ja.indices) {
    const double ai = a[i];
    for (const auto& e : t.triple_slice(i)) {
      if (jb.contains(e.k)) {
        out[e.j] += ai * e.value * b[e.k];
        ++macc;
      }
      if (e.j != e.k && jb.contains(e.j)) {
        out[e.k] += ai * e.value * b[e.j];
        ++macc;
      }
    }
  }
  if (ops) ops->macc += macc;
  return out;
}

Vector reduced_product(const ProductTensors& t, const Vector& a, const ReducedIndexSet& ja,
                       const Vector& b, const ReducedIndexSet& jb, const Vector& c,
                       const ReducedIndexSet& jc, OpCounters* ops) {
  const int P = t.size();
  Vector out = Vector::Zero(P);
  std::uint64_t macc = 0;
  const std::vector<int> u = index_union(ja, jb);
  const int nu = static_cast<int>(u.size());
  for (int hi = 0; hi < nu; ++hi) {
    const int h = u[hi];
    const bool ha = ja.contains(h), hb = jb.contains(h);
    for (int ii = hi; ii < nu; ++ii) {
      const int i = u[ii];
      double g = 0.0;
      if (ha && jb.contains(i)) g += a[h] * b[i];
      if (h < i && ja.contains(i) && hb) g += a[i] * b[h];
      if (g == 0.0) continue;
      macc += 2;
      for (const auto& e : t.quad_pair_slice(h, i)) {
        if (jc.contains(e.k)) {
          out[e.j] += g * e.value * c[e.k];
          ++macc;
        }
        if (e.j != e.k && jc.contains(e.j)) {
          out[e.k] += g * e.value * c[e.j];
          ++macc;
        }
      }
    }
  }
  if (ops) ops->macc += macc;
  return out;
}

}  // namespace sgflow::reduced
