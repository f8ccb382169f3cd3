#pragma once

// Backward exponential-trapezoid stepping shared by the Lyapunov and the
// direct Riccati solvers. Internal header.

#include <cstddef>
#include <functional>
#include <vector>

#include "kric/field.hpp"

namespace kric::detail {

/// Per atom pair (j, k), with x = theta_j + theta_k and step h:
///   decay = e^{-x h}, weight = h phi1(x h), gap = h (phi1(x h)/2 - ramp(x h)).
struct StepWeights {
  std::vector<double> decay;
  std::vector<double> weight;
  std::vector<double> gap;
};

StepWeights make_step_weights(const MeasureAtoms& m, double h);

/// rhs(s, psi, out): out = right-hand side at grid index s evaluated on psi.
using RhsFn = std::function<void(std::size_t, const KernelSlice&, KernelSlice&)>;

struct StepperStats {
  std::size_t total_inner = 0;
  std::size_t max_inner = 0;
  double residual = 0.0;
  double step_error = 0.0;
};

/// Fills field slices s = M-1, ..., 0 from the zero terminal slice. Each step
/// solves psi_s = E psi_{s+1} + H (F(psi_s) + F(psi_{s+1})) / 2 by fixed-point
/// iteration started from the exponential Euler predictor. Throws
/// ConvergenceError when the inner loop stalls and NumericalError on
/// non-finite values.
StepperStats backward_solve(KernelField& field, const RhsFn& rhs, double inner_tol,
                            std::size_t inner_max);

/// One explicit sweep of the discrete mild map:
/// out_M = 0, out_s = E out_{s+1} + H (F(in_s) + F(in_{s+1})) / 2.
void picard_sweep(const KernelField& in, KernelField& out, const RhsFn& rhs);

/// max_s |psi_s - E psi_{s+1} - H (F(psi_s) + F(psi_{s+1})) / 2|_{L1}.
double mild_residual(const KernelField& field, const RhsFn& rhs);

}  // namespace kric::detail
