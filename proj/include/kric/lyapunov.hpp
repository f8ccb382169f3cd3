#pragma once

// Linear kernel equations of Lyapunov type on the atom grid:
//
//   Psi_t(j,k) = int_t^T e^{-(theta_j+theta_k)(s-t)} F(s, Psi_s)(j,k) ds,
//   F(s,Psi)(j,k) = Qt_s(j,k) + Dt1_s(j)^T U Dt2_s(k)
//                 + Bt1_s(j)^T V(k) + W(j) Bt2_s(k),
//
// with V, W, U the atom integrals of Psi (see SliceIntegrals).

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "kric/field.hpp"
#include "kric/measure.hpp"

namespace kric {

/// Coefficients of a Lyapunov equation, evaluated at a time value t.
///
/// qtilde fills an n x n slice of d x d blocks. The four vector coefficients
/// return n matrices of shape d' x d. Any callback left empty is zero.
struct LyapunovCoefficients {
  std::function<void(double t, KernelSlice& out)> qtilde;
  std::function<AtomMatrices(double t)> btilde1;
  std::function<AtomMatrices(double t)> btilde2;
  std::function<AtomMatrices(double t)> dtilde1;
  std::function<AtomMatrices(double t)> dtilde2;
  /// Set when Bt1 = Bt2, Dt1 = Dt2 and Qt is symmetric in (theta, tau).
  bool symmetric = false;

  /// Time-constant coefficients, the same at every atom.
  static LyapunovCoefficients constant(std::size_t n, const Eigen::MatrixXd& q,
                                       const Eigen::MatrixXd& b, const Eigen::MatrixXd& dmat);
  /// Time-constant coefficients with an arbitrary Qt slice.
  static LyapunovCoefficients constant(const KernelSlice& q, const AtomMatrices& b,
                                       const AtomMatrices& dmat);
};

/// All coefficients frozen at one time.
struct CoefficientSnapshot {
  KernelSlice qtilde;
  AtomMatrices b1, b2, d1, d2;
  bool has_b1 = false, has_b2 = false, has_d1 = false, has_d2 = false;
};

CoefficientSnapshot evaluate_coefficients(const LyapunovCoefficients& c, const MeasureAtoms& m,
                                          double t);

/// out = F(s, psi) for frozen coefficients. Throws ConfigError on shape
/// mismatches.
void lyapunov_rhs(const MeasureAtoms& m, const CoefficientSnapshot& c, const KernelSlice& psi,
                  KernelSlice& out);

/// Sup over the grid times of the coefficient norms entering the contraction
/// estimate: max(|Bt1|, |Bt2|, |Dt1| |Dt2|).
double coefficient_bound(const LyapunovCoefficients& c, const MeasureAtoms& m,
                         const TimeGrid& grid);

enum class LyapunovMethod { exponential_integrator, picard_contraction };

std::string to_string(LyapunovMethod m);
LyapunovMethod lyapunov_method_from_string(const std::string& s);

struct LyapunovSolveOptions {
  LyapunovMethod method = LyapunovMethod::exponential_integrator;
  std::size_t time_steps = 1000;
  /// Negative selects the default weight 4 kappa (1 + |Kbar|_1 + |Kbar|_2^2).
  double picard_lambda = -1.0;
  double picard_tol = 1e-12;
  std::size_t picard_max_iter = 500;
  /// Relative tolerance of the implicit trapezoid fixed-point loop.
  double inner_tol = 1e-12;
  std::size_t inner_max_iter = 50;
  /// Picard only: abort with NonContractionError once a ratio >= 1 is seen.
  bool fail_on_expansion = true;
};

struct LyapunovReport {
  LyapunovMethod method = LyapunovMethod::exponential_integrator;
  std::size_t steps = 0;
  double sup_l1_norm = 0.0;
  double row_bound = 0.0;
  double col_bound = 0.0;
  /// Picard sweeps, or the total number of inner fixed-point passes.
  std::size_t iterations = 0;
  std::size_t max_inner_iterations = 0;
  /// max_s of the L1 mismatch in the discrete step relation.
  double residual = 0.0;
  /// Sum over steps of the local trapezoid error terms.
  double step_error_estimate = 0.0;
};

struct LyapunovSolution {
  KernelField field;
  LyapunovReport report;
};

LyapunovSolution solve_lyapunov(std::shared_ptr<const MeasureAtoms> m,
                                const LyapunovCoefficients& coeffs, double horizon,
                                const LyapunovSolveOptions& opts = {});

struct PicardTrace {
  double lambda = 0.0;
  std::vector<double> differences;  // lambda-weighted sup-L1 norm of successive iterates
  std::vector<double> ratios;       // differences[k] / differences[k-1]
  bool converged = false;
};

struct PicardResult {
  KernelField field;
  PicardTrace trace;
};

/// Successive approximation Psi^{k+1} = T Psi^k from Psi^0 = 0. Throws
/// NonContractionError when a ratio >= 1 appears (and opts allow it) and
/// ConvergenceError when max_iter is exhausted.
PicardResult picard_iterate(std::shared_ptr<const MeasureAtoms> m,
                            const LyapunovCoefficients& coeffs, double horizon, double lambda,
                            double tol, std::size_t max_iter, std::size_t time_steps,
                            bool fail_on_expansion = true);

double default_picard_lambda(const LyapunovCoefficients& coeffs, const MeasureAtoms& m,
                             const TimeGrid& grid);

/// |Psi_{t_{s+1}} - Psi_{t_s}|_{L1}, one entry per step.
std::vector<double> continuity_modulus(const KernelField& f);

/// U_t = sum_{j,k} w_j^T Psi_t(j,k) w_k for every grid time.
std::vector<Eigen::MatrixXd> double_integral_path(const KernelField& f);

}  // namespace kric
