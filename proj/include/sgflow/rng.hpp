#pragma once

#include <cstdint>

namespace sgflow {

/// Counter-based uniform generator. A draw is a pure function of
/// (seed, stream, counter), so parallel Monte Carlo sampling is
/// order-independent and reproducible for any thread count.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  /// Uniform in [0,1).
  double uniform01(std::uint64_t stream, std::uint64_t counter) const {
    std::uint64_t z = mix(seed_ ^ mix(stream ^ mix(counter + 0x9e3779b97f4a7c15ULL)));
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }

  /// Uniform in [-1,1].
  double uniform_pm1(std::uint64_t stream, std::uint64_t counter) const {
    return 2.0 * uniform01(stream, counter) - 1.0;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

}  // namespace sgflow
