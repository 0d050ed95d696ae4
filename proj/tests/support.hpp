#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "rxid/core_math.hpp"
#include "rxid/rng.hpp"

namespace rxid::test {

inline Vec random_unit(Rng& rng, std::size_t d) {
  Vec v(d);
  for (double& x : v) x = rng.normal();
  return math::l2_normalize(v);
}

inline Matrix random_unit_rows(Rng& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec v = random_unit(rng, d);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

// Relative error with an absolute floor so near-zero entries do not explode.
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Simpson's rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double standard_normal_density(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// Standard normal CDF by quadrature from a far-left cutoff, independent of erfc.
inline double quadrature_cdf(double z) { return simpson(standard_normal_density, -12.0, z); }

}  // namespace rxid::test
