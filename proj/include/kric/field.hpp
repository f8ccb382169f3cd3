#pragma once

// Kernel fields Gamma_t(theta_j, theta_k) on the atom x atom x time grid.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "kric/measure.hpp"

namespace kric {

/// Uniform time grid 0 = t_0 < ... < t_M = T.
struct TimeGrid {
  double horizon = 1.0;
  std::size_t steps = 1;

  double dt() const { return horizon / static_cast<double>(steps); }
  double time(std::size_t s) const {
    return s == steps ? horizon : horizon * static_cast<double>(s) / static_cast<double>(steps);
  }
  std::size_t nearest_index(double t) const;
  std::vector<double> times() const;
};

/// n per-atom matrices of one shape, stored planar: entry (r, c) of all atoms
/// is contiguous.
class AtomMatrices {
 public:
  AtomMatrices() = default;
  AtomMatrices(std::size_t n, Eigen::Index rows, Eigen::Index cols);
  /// The same matrix at every atom.
  static AtomMatrices constant(std::size_t n, const Eigen::MatrixXd& value);

  std::size_t size() const { return n_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  std::span<double> plane(Eigen::Index r, Eigen::Index c) {
    return {data_.data() + static_cast<std::size_t>(r * cols_ + c) * n_, n_};
  }
  std::span<const double> plane(Eigen::Index r, Eigen::Index c) const {
    return {data_.data() + static_cast<std::size_t>(r * cols_ + c) * n_, n_};
  }
  double& at(std::size_t k, Eigen::Index r, Eigen::Index c) {
    return data_[static_cast<std::size_t>(r * cols_ + c) * n_ + k];
  }
  double at(std::size_t k, Eigen::Index r, Eigen::Index c) const {
    return data_[static_cast<std::size_t>(r * cols_ + c) * n_ + k];
  }
  Eigen::MatrixXd matrix(std::size_t k) const;
  void set(std::size_t k, const Eigen::MatrixXd& value);
  /// max_k |M_k| (Frobenius).
  double sup_norm() const;
  bool all_finite() const;

 private:
  std::size_t n_ = 0;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<double> data_;
};

/// One time slice: an n x n grid of d x d blocks. Stored as d*d planes of
/// n*n doubles (row j, column k), so that all (j, k) work for a fixed block
/// entry runs over contiguous memory.
class KernelSlice {
 public:
  KernelSlice() = default;
  KernelSlice(std::size_t n, Eigen::Index d);
  /// Gamma(theta_j, theta_k) = value for every pair.
  static KernelSlice constant(std::size_t n, const Eigen::MatrixXd& value);

  std::size_t n() const { return n_; }
  Eigen::Index d() const { return d_; }

  std::span<double> plane(Eigen::Index a, Eigen::Index b) {
    return {data_.data() + plane_offset(a, b), n_ * n_};
  }
  std::span<const double> plane(Eigen::Index a, Eigen::Index b) const {
    return {data_.data() + plane_offset(a, b), n_ * n_};
  }
  std::span<double> row(Eigen::Index a, Eigen::Index b, std::size_t j) {
    return {data_.data() + plane_offset(a, b) + j * n_, n_};
  }
  std::span<const double> row(Eigen::Index a, Eigen::Index b, std::size_t j) const {
    return {data_.data() + plane_offset(a, b) + j * n_, n_};
  }
  double& at(std::size_t j, std::size_t k, Eigen::Index a, Eigen::Index b) {
    return data_[plane_offset(a, b) + j * n_ + k];
  }
  double at(std::size_t j, std::size_t k, Eigen::Index a, Eigen::Index b) const {
    return data_[plane_offset(a, b) + j * n_ + k];
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Eigen::MatrixXd block(std::size_t j, std::size_t k) const;
  void set_block(std::size_t j, std::size_t k, const Eigen::MatrixXd& value);

  void set_zero();
  bool is_zero() const;
  bool all_finite() const;
  double max_abs() const;

  KernelSlice& operator+=(const KernelSlice& other);
  KernelSlice& operator-=(const KernelSlice& other);
  KernelSlice& operator*=(double s);

  /// out(j,k)_{ab} += x[j] * y[k] on plane (a, b).
  void add_outer(Eigen::Index a, Eigen::Index b, std::span<const double> x,
                 std::span<const double> y);

 private:
  std::size_t plane_offset(Eigen::Index a, Eigen::Index b) const {
    return static_cast<std::size_t>(a * d_ + b) * n_ * n_;
  }
  std::size_t n_ = 0;
  Eigen::Index d_ = 0;
  std::vector<double> data_;
};

KernelSlice operator-(KernelSlice lhs, const KernelSlice& rhs);
KernelSlice operator+(KernelSlice lhs, const KernelSlice& rhs);

/// The atom-weighted integrals of a slice that every right-hand side uses:
///   col(k) = sum_j w_j^T Gamma(j, k)          (d' x d)   "int mu^T Gamma(., tau)"
///   row(j) = sum_k Gamma(j, k) w_k            (d x d')   "int Gamma(theta, .) mu"
///   total  = sum_{j,k} w_j^T Gamma(j, k) w_k  (d' x d')  "U"
struct SliceIntegrals {
  AtomMatrices col;
  AtomMatrices row;
  Eigen::MatrixXd total;
};

SliceIntegrals slice_integrals(const KernelSlice& g, const MeasureAtoms& m);

/// U = double integral of the slice against mu (d' x d').
Eigen::MatrixXd double_integral(const KernelSlice& g, const MeasureAtoms& m);

/// Kernel field over a time grid. Holds the measure by shared pointer.
class KernelField {
 public:
  KernelField(std::shared_ptr<const MeasureAtoms> measure, TimeGrid grid);

  const MeasureAtoms& measure() const { return *measure_; }
  const std::shared_ptr<const MeasureAtoms>& measure_ptr() const { return measure_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t steps() const { return grid_.steps; }
  std::size_t n() const { return measure_->size(); }
  Eigen::Index d() const { return measure_->d(); }

  KernelSlice& slice(std::size_t s) { return slices_[s]; }
  const KernelSlice& slice(std::size_t s) const { return slices_[s]; }
  bool all_finite() const;

 private:
  std::shared_ptr<const MeasureAtoms> measure_;
  TimeGrid grid_;
  std::vector<KernelSlice> slices_;
};

/// Samples phi(theta_k), one row per atom.
struct TestFunction {
  Eigen::MatrixXd values;  // n x dim

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  Eigen::Index dim() const { return values.cols(); }
  static TestFunction constant(std::size_t n, const Eigen::VectorXd& v);
};

struct PsdCheckResult {
  double min_eigenvalue = 0.0;
  double symmetric_defect = 0.0;
  bool passed = false;
};

struct CauchySchwarzResult {
  double max_violation = 0.0;           // max of <f,Gg>^2 - <f,Gf><g,Gg>
  double max_relative_violation = 0.0;  // violation / (l1 * |f|inf * |g|inf)^2
  std::size_t trials = 0;
};

/// sum_{j,k} |w_j| |Gamma(j,k)| |w_k|, with |.| the Frobenius norm.
double l1_norm(const KernelSlice& g, const MeasureAtoms& m);
double l1_norm(const KernelField& f, std::size_t s);
/// max_j sum_k |w_k| |Gamma(j,k)|.
double row_bound(const KernelSlice& g, const MeasureAtoms& m);
/// max_k sum_j |w_j| |Gamma(j,k)|.
double col_bound(const KernelSlice& g, const MeasureAtoms& m);
/// L1 norm of a difference without materializing it.
double l1_distance(const KernelSlice& a, const KernelSlice& b, const MeasureAtoms& m);
/// max over the time grid of the L1 distance.
double sup_l1_distance(const KernelField& a, const KernelField& b);

/// <phi, psi>_mu = sum_k phi_k^T w_k^T psi_k; phi has dim d', psi dim d.
double dual_pairing(const TestFunction& phi, const TestFunction& psi, const MeasureAtoms& m);

/// (G phi)(theta_j) = sum_k Gamma(j,k) w_k phi_k; phi has dim d', result dim d.
TestFunction apply_operator(const KernelSlice& g, const MeasureAtoms& m, const TestFunction& phi);
TestFunction apply_operator(const KernelField& f, std::size_t s, const TestFunction& phi);

/// <phi, G phi>_mu as a quadratic form.
double quadratic_form(const KernelSlice& g, const MeasureAtoms& m, const TestFunction& phi);

/// The n d' x n d' matrix with blocks w_j^T Gamma(j,k) w_k, symmetrized.
Eigen::MatrixXd gram_matrix(const KernelSlice& g, const MeasureAtoms& m);

/// max_{j,k} |Gamma(j,k) - Gamma(k,j)^T|.
double symmetric_defect(const KernelSlice& g);

/// Symmetry and nonnegativity on the atom grid. Passes iff the defect and
/// the negative part of the Gram spectrum are both within tol.
PsdCheckResult check_symmetric_nonnegative(const KernelSlice& g, const MeasureAtoms& m, double tol);
PsdCheckResult check_symmetric_nonnegative(const KernelField& f, std::size_t s, double tol);

/// 1e-8 * (1 + l1_norm): the default absolute tolerance for PSD checks.
double default_psd_tolerance(const KernelSlice& g, const MeasureAtoms& m);

/// f >=_mu g at slice s.
bool order_compare(const KernelField& f, const KernelField& g, std::size_t s, double tol);

/// Largest Cauchy-Schwarz violation over random (phi, psi) pairs.
CauchySchwarzResult cauchy_schwarz_check(const KernelSlice& g, const MeasureAtoms& m,
                                         std::size_t trials, std::uint64_t seed = 7);

}  // namespace kric
