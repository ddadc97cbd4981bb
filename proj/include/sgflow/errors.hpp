#pragma once

#include <stdexcept>
#include <string>

namespace sgflow {

/// The Galerkin flux denominator matrix failed its Cholesky factorization.
/// Recoverable: the time-stepping driver may halve dt once and retry.
class HyperbolicityRiskError : public std::runtime_error {
 public:
  HyperbolicityRiskError(const std::string& what, double smallest_pivot)
      : std::runtime_error(what), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

/// A linear system was singular beyond recovery.
class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configured resource cap (basis size, tensor nonzeros) was exceeded.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgflow
