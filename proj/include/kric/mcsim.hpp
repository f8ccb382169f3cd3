#pragma once

// Monte Carlo evaluation of Lyapunov quadratic forms through the lifted
// process, one state per atom driven by a single Brownian motion:
//
//   dY_s(theta) = (-theta Y_s(theta) + sum_tau Bt_s(tau) w_tau Y_s(tau)) ds
//               + (sum_tau Dt_s(tau) w_tau Y_s(tau)) dW_s,   Y_t = phi,
//
// for which <phi, Psi_t phi>_mu = E int_t^T <Y_s, Qt_s Y_s>_mu ds.

#include <cstdint>
#include <memory>
#include <vector>

#include "kric/field.hpp"
#include "kric/lyapunov.hpp"

namespace kric {

struct McOptions {
  std::size_t paths = 10000;
  std::size_t steps = 1000;
  std::uint64_t seed = 42;
  bool antithetic = false;
  /// Worker threads; 0 uses the hardware concurrency. Results do not depend
  /// on this value.
  std::size_t threads = 0;
};

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t paths_used = 0;
  std::size_t excluded = 0;      // paths dropped after blowing up
  double fourth_moment = 0.0;    // mean over paths of max_s |Y_s|^4
  bool qtilde_psd_warning = false;
};

/// Estimates <phi, Psi_t phi>_mu. Throws ConfigError on invalid options or a
/// non-symmetric configuration (Bt1 != Bt2 or Dt1 != Dt2 is not detectable,
/// so only btilde1 and dtilde1 are used and `symmetric` must be set).
McResult simulate_quadratic_form(const MeasureAtoms& mu, const LyapunovCoefficients& coeffs,
                                 const TestFunction& phi, double t, double horizon,
                                 const McOptions& opts);

struct PositivityProbe {
  double min_estimate = 0.0;
  double max_std_error = 0.0;
  std::size_t trials = 0;
  bool passed = false;  // min_estimate >= -3 max_std_error
};

/// Minimum Monte Carlo estimate of <phi, Psi_t phi> over random phi drawn
/// from the options seed.
PositivityProbe positivity_probe(const MeasureAtoms& mu, const LyapunovCoefficients& coeffs,
                                 double t, double horizon, std::size_t trials,
                                 const McOptions& opts);

/// Fixed-topology pairwise sum: the result depends only on the input order.
double pairwise_sum(const double* x, std::size_t n);

}  // namespace kric
