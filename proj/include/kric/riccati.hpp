#pragma once

// Kernel Riccati equation
//
//   Gamma_t = int_t^T e^{-(theta+tau)(s-t)} R(Gamma_s) ds,   Gamma_T = 0,
//   R(G)(j,k) = Q + D^T U D + B^T V(k) + W(j) B - S(j)^T Nhat^{-1} S(k),
//   S(k) = C^T V(k) + F^T U D,   Nhat = N + F^T U F,
//
// solved either by the monotone sequence of Lyapunov problems driven by the
// feedback Theta = -Nhat^{-1} S, or by stepping the nonlinear equation.

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "kric/field.hpp"
#include "kric/lyapunov.hpp"
#include "kric/measure.hpp"

namespace kric {

struct LQCoefficients {
  Eigen::MatrixXd B;  // d' x d
  Eigen::MatrixXd D;  // d' x d
  Eigen::MatrixXd C;  // d' x m
  Eigen::MatrixXd F;  // d' x m
  Eigen::MatrixXd Q;  // d x d, symmetric psd
  Eigen::MatrixXd N;  // m x m, symmetric, N - lambda I psd
  double lambda_margin = 1.0;

  Eigen::Index d() const { return Q.rows(); }
  Eigen::Index d_prime() const { return B.rows(); }
  Eigen::Index m() const { return N.rows(); }

  /// Shapes against the measure, symmetry, Q psd and N >= lambda I.
  /// Throws ConfigError.
  void validate(const MeasureAtoms& mu) const;

  /// Scalar problem (d = d' = m = 1).
  static LQCoefficients scalar(double b, double c, double d, double f, double q, double n,
                               double lambda);
};

/// Theta_t(theta_k), an m x d matrix per atom, on a time grid.
struct FeedbackField {
  TimeGrid grid;
  std::vector<AtomMatrices> values;  // steps + 1 entries

  double sup_norm() const;
};

/// Nhat(G) = N + F^T U F.
Eigen::MatrixXd nhat(const MeasureAtoms& mu, const LQCoefficients& lq, const KernelSlice& g);

/// Theta(k) = -Nhat^{-1} (F^T U D + C^T V(k)). Throws FeedbackFloorError when
/// the smallest eigenvalue of Nhat is below floor; t is only used in the
/// message.
AtomMatrices theta_feedback(const MeasureAtoms& mu, const LQCoefficients& lq,
                            const KernelSlice& g, double floor,
                            double t = std::numeric_limits<double>::quiet_NaN());

FeedbackField theta_field(const LQCoefficients& lq, const KernelField& g, double floor);

/// out = R(g). Same floor semantics as theta_feedback.
void riccati_rhs(const MeasureAtoms& mu, const LQCoefficients& lq, const KernelSlice& g,
                 KernelSlice& out, double floor,
                 double t = std::numeric_limits<double>::quiet_NaN());

/// Coefficients Qt = Q + Theta^T N Theta, Bt = B + C Theta, Dt = D + F Theta.
/// Theta is read at the grid index nearest to t; pass nullptr for Theta = 0.
LyapunovCoefficients feedback_coefficients(const LQCoefficients& lq, const MeasureAtoms& mu,
                                           std::shared_ptr<const FeedbackField> theta);

struct IterationView {
  std::size_t index = 0;  // i
  const KernelField* gamma = nullptr;       // Gamma^i
  const KernelField* gamma_next = nullptr;  // Gamma^{i+1}
  const FeedbackField* theta_prev = nullptr;  // Theta^{i-1}, null for i = 0
  const FeedbackField* theta = nullptr;       // Theta^i
  double difference = 0.0;                    // sup_t |Gamma^{i+1} - Gamma^i|_L1
  const LyapunovReport* lyapunov = nullptr;   // report of the Gamma^{i+1} solve
};

struct RiccatiSolveOptions {
  std::size_t max_outer_iter = 200;
  /// Negative selects 1e-8 (1 + sup_t |Gamma^0|_L1).
  double outer_tol = -1.0;
  LyapunovSolveOptions lyapunov;
  /// Negative selects lambda_margin / 2.
  double nhat_floor = -1.0;
  /// Stride between slices inspected by the Gram-matrix checks; 0 disables
  /// the per-iteration order checks.
  std::size_t check_stride = 1;
  std::function<void(const IterationView&)> on_iteration;
};

struct PropertyChecks {
  bool terminal_zero = true;
  double symmetry_defect = 0.0;  // max_s defect / max(1, max |Gamma_s|)
  bool symmetry_ok = true;
  double min_gram_eigenvalue = 0.0;  // min_s lambda_min / (1 + |Gamma_s|_L1)
  bool psd_ok = true;
  double worst_order_violation = 0.0;  // most negative scaled eigenvalue of Gamma^i - Gamma^{i+1}
  bool monotone_ok = true;
  double min_nhat_eigenvalue = std::numeric_limits<double>::infinity();
  bool nhat_floor_ok = true;   // Nhat - floor I psd
  bool nhat_margin_ok = true;  // Nhat - lambda I psd (up to round-off)
  bool u_time_monotone = true;
  bool u_iteration_monotone = true;
  bool cauchy_monotone = true;

  bool all_passed() const {
    return terminal_zero && symmetry_ok && psd_ok && monotone_ok && nhat_floor_ok &&
           nhat_margin_ok && u_time_monotone && u_iteration_monotone && cauchy_monotone;
  }
};

struct RiccatiReport {
  std::string method;
  std::size_t steps = 0;
  std::size_t outer_iterations = 0;
  std::vector<double> differences;
  double outer_tol = 0.0;
  double gamma0_sup_l1 = 0.0;
  double sup_l1_norm = 0.0;
  double residual = 0.0;
  double step_error_estimate = 0.0;
  double estimate_m = 0.0;
  PropertyChecks checks;
};

struct RiccatiSolution {
  KernelField gamma;
  FeedbackField theta;
  RiccatiReport report;
};

RiccatiSolution solve_riccati_iterative(std::shared_ptr<const MeasureAtoms> mu,
                                        const LQCoefficients& lq, double horizon,
                                        const RiccatiSolveOptions& opts = {});

RiccatiSolution solve_riccati_direct(std::shared_ptr<const MeasureAtoms> mu,
                                     const LQCoefficients& lq, double horizon,
                                     const RiccatiSolveOptions& opts = {});

/// Max over the discrete mild Riccati relation of the L1 mismatch.
double riccati_mild_residual(const KernelField& g, const LQCoefficients& lq, double floor);

struct DeltaResidual {
  double residual = 0.0;             // sup_t |Delta_solved - (Gamma^i - Gamma^{i+1})|_L1
  double step_error_estimate = 0.0;  // of the Delta solve
  double delta_sup_l1 = 0.0;         // sup_t |Gamma^i - Gamma^{i+1}|_L1
  double coupling_defect = 0.0;      // max |S(Gamma^i) + Nhat(Gamma^i) Theta^i|
};

/// Solves the Lyapunov equation satisfied by Gamma^i - Gamma^{i+1} (source
/// rho^T Nhat(Gamma^i) rho with rho = Theta^{i-1} - Theta^i, coefficients from
/// Theta^i) and compares it with the difference of the two fields.
DeltaResidual delta_residual(const LQCoefficients& lq, const KernelField& gamma_i,
                             const KernelField& gamma_next, const FeedbackField* theta_prev,
                             const LyapunovSolveOptions& opts, double floor = -1.0);

/// max_{t, j} sum_k |w_k| |Gamma_t(j,k)|.
double estimate_report(const KernelField& g);

/// Slice-wise invariants of a final solution (terminal, symmetry, Gram psd,
/// time monotonicity of U). Inspects every stride-th slice plus t = 0.
PropertyChecks check_solution(const KernelField& g, std::size_t stride = 1,
                              double step_error = 0.0);

}  // namespace kric
