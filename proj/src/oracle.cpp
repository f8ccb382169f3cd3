#include "kric/oracle.hpp"

#include <cmath>
#include <string>

#include "kric/errors.hpp"

namespace kric {

DenseRiccatiSystem assemble_dense(const MeasureAtoms& mu, const LQCoefficients& lq, double dt) {
  lq.validate(mu);
  if (!(dt > 0.0)) throw ConfigError("oracle step must be positive");
  DenseRiccatiSystem sys;
  sys.n = static_cast<Eigen::Index>(mu.size());
  sys.d = mu.d();
  sys.d_prime = mu.d_prime();
  const Eigen::Index n = sys.n, d = sys.d, dp = sys.d_prime;
  sys.lambda.resize(n * d, n * d);
  sys.wstack.resize(n * d, dp);
  sys.q_tile.resize(n * d, n * d);
  sys.b_row.resize(dp, n * d);
  sys.d_row.resize(dp, n * d);
  for (Eigen::Index j = 0; j < n; ++j) {
    sys.wstack.block(j * d, 0, d, dp) = mu.weight(static_cast<std::size_t>(j));
    sys.b_row.block(0, j * d, dp, d) = lq.B;
    sys.d_row.block(0, j * d, dp, d) = lq.D;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double rate = mu.node(static_cast<std::size_t>(j)) + mu.node(static_cast<std::size_t>(k));
      sys.lambda.block(j * d, k * d, d, d).setConstant(rate);
      sys.q_tile.block(j * d, k * d, d, d) = lq.Q;
      sys.max_rate = std::max(sys.max_rate, rate);
    }
  }
  sys.C = lq.C;
  sys.F = lq.F;
  sys.N = lq.N;
  sys.dt = dt;
  return sys;
}

Eigen::MatrixXd DenseRiccatiSystem::riccati_map(const Eigen::MatrixXd& g) const {
  const Eigen::MatrixXd v = wstack.transpose() * g;  // d' x nd, block k = V(k)
  const Eigen::MatrixXd w = g * wstack;              // nd x d', block j = W(j)
  const Eigen::MatrixXd u = v * wstack;              // d' x d'
  const Eigen::MatrixXd s = C.transpose() * v + F.transpose() * u * d_row;  // m x nd
  const Eigen::MatrixXd nh = N + F.transpose() * u * F;
  const Eigen::MatrixXd ninv_s = nh.ldlt().solve(s);
  return q_tile + d_row.transpose() * u * d_row + b_row.transpose() * v + w * b_row -
         s.transpose() * ninv_s;
}

Eigen::MatrixXd DenseRiccatiSystem::derivative(const Eigen::MatrixXd& g) const {
  return lambda.cwiseProduct(g) - riccati_map(g);
}

DenseTrajectory integrate_rk4(const DenseRiccatiSystem& sys, const TimeGrid& grid) {
  DenseTrajectory out;
  out.grid = grid;
  out.substeps = static_cast<std::size_t>(std::ceil(grid.dt() / sys.dt - 1e-9));
  if (out.substeps < 1) out.substeps = 1;
  const double h = grid.dt() / static_cast<double>(out.substeps);
  out.stiffness_warning = h * sys.max_rate > 0.1;

  const Eigen::Index nd = sys.n * sys.d;
  out.values.assign(grid.steps + 1, Eigen::MatrixXd::Zero(nd, nd));
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(nd, nd);
  // Backward in t: with r = T - t, dG/dr = -dG/dt.
  auto f = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return -sys.derivative(x); };
  for (std::size_t s = grid.steps; s-- > 0;) {
    for (std::size_t k = 0; k < out.substeps; ++k) {
      const Eigen::MatrixXd k1 = f(g);
      const Eigen::MatrixXd k2 = f(g + 0.5 * h * k1);
      const Eigen::MatrixXd k3 = f(g + 0.5 * h * k2);
      const Eigen::MatrixXd k4 = f(g + h * k3);
      g += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!g.allFinite() || (g.size() > 0 && g.cwiseAbs().maxCoeff() > 1e12)) {
      throw NumericalError("oracle trajectory blew up at t=" + std::to_string(grid.time(s)));
    }
    out.values[s] = g;
  }
  return out;
}

KernelSlice dense_to_slice(const Eigen::MatrixXd& g, Eigen::Index n, Eigen::Index d) {
  KernelSlice s(static_cast<std::size_t>(n), d);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      s.set_block(static_cast<std::size_t>(j), static_cast<std::size_t>(k),
                  g.block(j * d, k * d, d, d));
    }
  }
  return s;
}

Eigen::MatrixXd slice_to_dense(const KernelSlice& s) {
  const auto n = static_cast<Eigen::Index>(s.n());
  const Eigen::Index d = s.d();
  Eigen::MatrixXd g(n * d, n * d);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      g.block(j * d, k * d, d, d) = s.block(static_cast<std::size_t>(j), static_cast<std::size_t>(k));
    }
  }
  return g;
}

KernelField trajectory_field(const DenseTrajectory& traj, std::shared_ptr<const MeasureAtoms> mu) {
  KernelField f(mu, traj.grid);
  const auto n = static_cast<Eigen::Index>(mu->size());
  for (std::size_t s = 0; s <= traj.grid.steps; ++s) {
    f.slice(s) = dense_to_slice(traj.values[s], n, mu->d());
  }
  return f;
}

}  // namespace kric
