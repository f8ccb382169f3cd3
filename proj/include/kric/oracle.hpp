#pragma once

// Dense ground truth for atomic measures. With mu = sum_k w_k delta_{theta_k}
// the kernel equation is an ordinary matrix Riccati ODE for the nd x nd
// matrix G with blocks G_{jk} = Gamma(theta_j, theta_k):
//
//   dG/dt = Lambda o G - R(G),   G(T) = 0,
//
// where Lambda_{jk} = theta_j + theta_k acts blockwise. This module assembles
// that ODE with plain Eigen block algebra (no shared code with the kernel
// solvers) and integrates it with classical RK4.

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "kric/field.hpp"
#include "kric/riccati.hpp"

namespace kric {

struct DenseRiccatiSystem {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  Eigen::Index d_prime = 0;
  Eigen::MatrixXd lambda;   // nd x nd, theta_j + theta_k on block (j, k)
  Eigen::MatrixXd wstack;   // nd x d', blocks w_k stacked
  Eigen::MatrixXd q_tile;   // nd x nd, Q on every block
  Eigen::MatrixXd b_row;    // d' x nd, [B B ... B]
  Eigen::MatrixXd d_row;    // d' x nd, [D D ... D]
  Eigen::MatrixXd C, F, N;  // as in LQCoefficients
  double dt = 1e-4;
  double max_rate = 0.0;    // max_{j,k} theta_j + theta_k

  /// R(G) for the dense representation.
  Eigen::MatrixXd riccati_map(const Eigen::MatrixXd& g) const;
  /// dG/dt in forward time.
  Eigen::MatrixXd derivative(const Eigen::MatrixXd& g) const;
};

DenseRiccatiSystem assemble_dense(const MeasureAtoms& mu, const LQCoefficients& lq,
                                  double dt = 1e-4);

struct DenseTrajectory {
  TimeGrid grid;
  std::vector<Eigen::MatrixXd> values;  // one nd x nd matrix per grid time
  bool stiffness_warning = false;       // dt * max_rate > 0.1
  std::size_t substeps = 0;             // RK4 steps per grid interval
};

/// Backward RK4 from G(T) = 0, sampled on the grid. Each grid interval is
/// split into ceil(grid.dt() / sys.dt) equal substeps. Throws NumericalError
/// when |G| exceeds 1e12.
DenseTrajectory integrate_rk4(const DenseRiccatiSystem& sys, const TimeGrid& grid);

/// Block (j, k) of a dense matrix as a kernel slice.
KernelSlice dense_to_slice(const Eigen::MatrixXd& g, Eigen::Index n, Eigen::Index d);
Eigen::MatrixXd slice_to_dense(const KernelSlice& s);

/// Converts a trajectory to a kernel field on the same measure.
KernelField trajectory_field(const DenseTrajectory& traj, std::shared_ptr<const MeasureAtoms> mu);

}  // namespace kric
