#pragma once

// Shared reference oracles for the unit tests. These deliberately avoid the
// library's own quadrature machinery: plain composite Gauss-Legendre with a
// fixed 12-point rule over many uniform subintervals.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace testref {

// 12-point Gauss-Legendre nodes/weights on [-1,1].
inline const std::array<double, 12>& gl12_x() {
  static const std::array<double, 12> x = {
      -0.9815606342467192, -0.9041172563704749, -0.7699026741943047,
      -0.5873179542866175, -0.3678314989981802, -0.1252334085114689,
      0.1252334085114689,  0.3678314989981802,  0.5873179542866175,
      0.7699026741943047,  0.9041172563704749,  0.9815606342467192};
  return x;
}
inline const std::array<double, 12>& gl12_w() {
  static const std::array<double, 12> w = {
      0.0471753363865118, 0.1069393259953184, 0.1600783285433462,
      0.2031674267230659, 0.2334925365383548, 0.2491470458134028,
      0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
      0.1600783285433462, 0.1069393259953184, 0.0471753363865118};
  return w;
}

// integral of f over [a,b] (plain measure, not probability)
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int subdivisions = 256) {
  double total = 0.0;
  const double h = (b - a) / subdivisions;
  for (int s = 0; s < subdivisions; ++s) {
    const double lo = a + s * h;
    for (int q = 0; q < 12; ++q)
      total += 0.5 * h * gl12_w()[q] * f(lo + 0.5 * h * (gl12_x()[q] + 1.0));
  }
  return total;
}

// expectation over [-1,1] with the uniform probability measure
inline double expect(const std::function<double(double)>& f, int subdivisions = 256) {
  return 0.5 * integrate(f, -1.0, 1.0, subdivisions);
}

// expectation over [-1,1]^2
inline double expect2(const std::function<double(double, double)>& f, int subdivisions = 64) {
  return expect(
      [&](double x) {
        return expect([&, x](double y) { return f(x, y); }, subdivisions);
      },
      subdivisions);
}

}  // namespace testref
