#pragma once

#include <cmath>

namespace kric {

/// phi1(x) = (1 - e^{-x}) / x, with phi1(0) = 1.
///
/// Below 1e-4 a four-term Taylor series is used; the truncation error there
/// is below x^4/120 < 1e-18.
inline double phi1(double x) {
  if (std::abs(x) < 1e-4) {
    return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
  }
  return -std::expm1(-x) / x;
}

/// Integral of e^{-x u} over u in [0, h], i.e. h * phi1(x h).
inline double decay_integral(double x, double h) { return h * phi1(x * h); }

/// ramp(z) = (1 - (1 + z) e^{-z}) / z^2, so that h * ramp(x h) is the
/// integral of e^{-x u} (u / h) over [0, h]. ramp(0) = 1/2.
inline double ramp(double z) {
  if (std::abs(z) < 1e-2) {
    return 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
  }
  return (1.0 - (1.0 + z) * std::exp(-z)) / (z * z);
}

}  // namespace kric
