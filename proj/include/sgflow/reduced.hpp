#pragma once

#include <vector>

#include "sgflow/galerkin.hpp"

namespace sgflow::reduced {

using galerkin::Matrix;
using galerkin::OpCounters;
using galerkin::ProductTensors;
using galerkin::Vector;

/// Indices whose coefficient magnitude exceeds the threshold, plus a
/// constant-time membership mask.
struct ReducedIndexSet {
  std::vector<int> indices;  ///< sorted
  std::vector<char> mask;    ///< size P
  double epsilon = 0.0;
  int count() const { return static_cast<int>(indices.size()); }
  bool contains(int j) const { return mask[j] != 0; }
};

/// J_a = { j : |a_j| > eps } by linear scan (strict inequality).
ReducedIndexSet significant_indices(const Vector& a, double eps);

/// Reduced-assembly matrices: same P x P shape, sums restricted to the
/// retained index sets.
Matrix reduced_product_matrix(const ProductTensors& t, const Vector& a,
                              const ReducedIndexSet& ja, OpCounters* ops = nullptr);
Matrix reduced_product_matrix(const ProductTensors& t, const Vector& a,
                              const ReducedIndexSet& ja, const Vector& b,
                              const ReducedIndexSet& jb, OpCounters* ops = nullptr);

/// Reduced-size matrix-vector products: contraction indices restricted to
/// the retained sets of every argument; all P output coefficients are
/// still written.
Vector reduced_product(const ProductTensors& t, const Vector& a, const ReducedIndexSet& ja,
                       const Vector& b, const ReducedIndexSet& jb, OpCounters* ops = nullptr);
Vector reduced_product(const ProductTensors& t, const Vector& a, const ReducedIndexSet& ja,
                       const Vector& b, const ReducedIndexSet& jb, const Vector& c,
                       const ReducedIndexSet& jc, OpCounters* ops = nullptr);

}  // namespace sgflow::reduced
