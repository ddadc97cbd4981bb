#pragma once

#include <cstdint>
#include <vector>

#include "sgflow/mw_basis.hpp"
#include "sgflow/parallel.hpp"

namespace sgflow::galerkin {

using mw::Matrix;
using mw::MwBasis;
using mw::QuadratureRule;
using mw::Vector;

/// Multiply-accumulate counter for the tensor-contraction work that the
/// locally reduced basis affects (matrix assembly and matrix-vector
/// products). Linear-solve flops are identical for full and reduced paths
/// and are not counted.
struct OpCounters {
  std::uint64_t macc = 0;
};

struct TensorStats {
  std::int64_t triple_nnz = 0;
  std::int64_t quad_nnz = 0;
  double build_seconds = 0.0;
  bool quad_available = true;
};

/// Precomputed sparse triple <psi_i psi_j psi_k> and quadruple
/// <psi_h psi_i psi_j psi_k> product tensors. Entries are stored once per
/// canonical (sorted) index tuple and expanded into role-grouped slices for
/// fast contraction. Immutable after build; all products are pure functions.
class ProductTensors {
 public:
  /// `quad_nnz_cap` bounds the stored quadruple entries; when exceeded the
  /// quadruple tensor is dropped (quad_available = false) and quad-tensor
  /// products throw CapacityError.
  static ProductTensors build(const MwBasis& basis, const QuadratureRule& rule,
                              double drop_tol = 1e-14,
                              std::int64_t quad_nnz_cap = (std::int64_t{1} << 26),
                              ExecMode mode = ExecMode::openmp);

  int size() const { return P_; }
  double drop_tol() const { return drop_tol_; }
  const TensorStats& stats() const { return stats_; }
  bool quad_available() const { return stats_.quad_available; }

  /// Tensor entry lookups (any index order).
  double triple(int i, int j, int k) const;
  double quad(int h, int i, int j, int k) const;

  /// [A(a)]_{jk} = sum_i <psi_i psi_j psi_k> a_i  (symmetric).
  Matrix product_matrix(const Vector& a, OpCounters* ops = nullptr) const;

  /// [B(a,b)]_{jk} = sum_{h,i} <psi_h psi_i psi_j psi_k> a_h b_i  (symmetric).
  Matrix product_matrix(const Vector& a, const Vector& b, OpCounters* ops = nullptr) const;

  /// Galerkin projection of the pointwise product a(xi) b(xi).
  Vector galerkin_product(const Vector& a, const Vector& b, OpCounters* ops = nullptr) const;

  /// Galerkin projection of the pointwise triple product a b c.
  Vector galerkin_product(const Vector& a, const Vector& b, const Vector& c,
                          OpCounters* ops = nullptr) const;

  // --- storage views used by the reduced-basis operators ---
  struct Entry {
    int j, k;  // j <= k
    double value;
  };
  const std::vector<Entry>& triple_slice(int i) const { return triple_slices_[i]; }
  const std::vector<Entry>& quad_pair_slice(int h, int i) const;  // h <= i

 private:
  int P_ = 0;
  double drop_tol_ = 0.0;
  TensorStats stats_;
  // canonical entries for lookups
  std::vector<std::pair<std::uint64_t, double>> triple_canon_;  // sorted keys
  std::vector<std::pair<std::uint64_t, double>> quad_canon_;
  // role-grouped expansions
  std::vector<std::vector<Entry>> triple_slices_;     // by i
  std::vector<std::vector<Entry>> quad_pair_slices_;  // by pair index (h <= i)

  int pair_index(int h, int i) const { return h * P_ - h * (h - 1) / 2 + (i - h); }
};

}  // namespace sgflow::galerkin
