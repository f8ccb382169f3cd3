#pragma once

// Signed matrix measures represented as finite atom systems, and their
// Laplace-transform kernels.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace kric {

/// A d x d' signed matrix measure with finitely many atoms
/// mu = sum_k w_k delta_{theta_k}.
///
/// Nodes are strictly increasing and nonnegative. The weights are stored both
/// as matrices and "planar": for every entry (a, c) a contiguous array over
/// atoms, which is what the kernel-field loops consume.
class MeasureAtoms {
 public:
  /// Zero measure with the given block dimensions.
  MeasureAtoms(Eigen::Index d = 1, Eigen::Index d_prime = 1);
  MeasureAtoms(std::vector<double> nodes, std::vector<Eigen::MatrixXd> weights,
               Eigen::Index d, Eigen::Index d_prime, bool from_density = false);

  /// d = d' = 1 convenience constructor.
  static MeasureAtoms scalar(std::vector<double> nodes, std::vector<double> weights,
                             bool from_density = false);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  Eigen::Index d() const { return d_; }
  Eigen::Index d_prime() const { return d_prime_; }
  bool from_density() const { return from_density_; }

  const std::vector<double>& nodes() const { return nodes_; }
  double node(std::size_t k) const { return nodes_[k]; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const Eigen::MatrixXd& weight(std::size_t k) const { return weights_[k]; }

  /// |w_k| (Frobenius norm) per atom.
  const std::vector<double>& abs_weights() const { return abs_weights_; }
  /// w_k(a, c) for k = 0..n-1.
  std::span<const double> weight_entries(Eigen::Index a, Eigen::Index c) const;

  /// Total variation sum_k |w_k|.
  double total_variation() const;

 private:
  std::vector<double> nodes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<double> abs_weights_;
  std::vector<double> planar_;
  Eigen::Index d_;
  Eigen::Index d_prime_;
  bool from_density_ = false;
};

struct FractionalDensity {
  double hurst = 0.1;
};

/// Tabulated density: theta samples (strictly increasing, >= 0) and the
/// d x d' density matrix at each sample, interpolated linearly in between.
struct UserDensity {
  std::vector<double> theta;
  std::vector<Eigen::MatrixXd> density;
};

struct DensityMeasureSpec {
  std::variant<FractionalDensity, UserDensity> kind = FractionalDensity{};
  double theta_min = 1e-3;
  double theta_max = 1e3;
  std::size_t levels = 50;
  // Fractional only: fold the mass on [0, theta_min] into the first cell.
  bool lump_lower_tail = true;
};

/// c_H = 1 / Gamma(1/2 - H), the constant for which
/// int_0^inf e^{-theta t} c_H theta^{-H-1/2} dtheta = t^{H-1/2}.
double fractional_constant(double hurst);

/// sum_k (1 ^ theta_k^{-1/2}) |w_k|, with the factor 1 at theta = 0.
double check_measure_condition(const MeasureAtoms& m);

/// Geometric-partition quadrature of a density measure: one atom per cell,
/// weight = cell mass, node = mass barycenter. Throws ConfigError on an
/// invalid spec.
MeasureAtoms discretize_density(const DensityMeasureSpec& spec);

/// K(t) = sum_k e^{-theta_k t} w_k, a d x d' matrix.
Eigen::MatrixXd kernel_eval(const MeasureAtoms& m, double t);

/// Kbar(t) = sum_k e^{-theta_k t} |w_k|.
double bar_kernel_eval(const MeasureAtoms& m, double t);

/// int_0^T Kbar(s) ds in closed form.
double bar_kernel_l1(const MeasureAtoms& m, double horizon);

/// int_0^T Kbar(s)^2 ds in closed form.
double bar_kernel_l2_squared(const MeasureAtoms& m, double horizon);

/// Condition values over a doubling sequence of levels, for divergence
/// detection on densities.
struct ConditionStudy {
  std::vector<std::size_t> levels;
  std::vector<double> values;
  std::vector<double> relative_changes;  // |v_{i+1} - v_i| / |v_{i+1}|
  bool cauchy = false;                   // last relative change <= tolerance
};

ConditionStudy condition_refinement_study(DensityMeasureSpec spec, std::size_t refinements,
                                          double tolerance = 0.01);

}  // namespace kric
