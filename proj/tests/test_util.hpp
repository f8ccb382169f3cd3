#pragma once

#include <memory>
#include <random>

#include "kric/measure.hpp"
#include "kric/riccati.hpp"

namespace kric::testing {

inline std::shared_ptr<const MeasureAtoms> fractional_measure(double hurst, std::size_t levels) {
  DensityMeasureSpec spec;
  spec.kind = FractionalDensity{hurst};
  spec.levels = levels;
  return std::make_shared<const MeasureAtoms>(discretize_density(spec));
}

// The scalar fractional control problem used throughout the tests.
inline LQCoefficients fractional_lq() { return LQCoefficients::scalar(0.3, 1.0, 0.2, 0.3, 1.0, 1.0, 0.5); }

inline std::shared_ptr<const MeasureAtoms> dirac(double theta, double w = 1.0) {
  return std::make_shared<const MeasureAtoms>(MeasureAtoms::scalar({theta}, {w}));
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                                     double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  }
  return m;
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index d, double shift) {
  const Eigen::MatrixXd a = random_matrix(rng, d, d);
  return a * a.transpose() + shift * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace kric::testing
