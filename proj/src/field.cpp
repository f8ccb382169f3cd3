#include "kric/field.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kric/errors.hpp"
#include "kric/simd/kernels.hpp"

namespace kric {

std::size_t TimeGrid::nearest_index(double t) const {
  if (t <= 0.0) return 0;
  if (t >= horizon) return steps;
  const double x = t / dt();
  return std::min<std::size_t>(steps, static_cast<std::size_t>(std::llround(x)));
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(steps + 1);
  for (std::size_t s = 0; s <= steps; ++s) t[s] = time(s);
  return t;
}

// AtomMatrices ---------------------------------------------------------------

AtomMatrices::AtomMatrices(std::size_t n, Eigen::Index rows, Eigen::Index cols)
    : n_(n), rows_(rows), cols_(cols), data_(n * static_cast<std::size_t>(rows * cols), 0.0) {}

AtomMatrices AtomMatrices::constant(std::size_t n, const Eigen::MatrixXd& value) {
  AtomMatrices out(n, value.rows(), value.cols());
  for (Eigen::Index r = 0; r < value.rows(); ++r) {
    for (Eigen::Index c = 0; c < value.cols(); ++c) {
      auto p = out.plane(r, c);
      std::fill(p.begin(), p.end(), value(r, c));
    }
  }
  return out;
}

Eigen::MatrixXd AtomMatrices::matrix(std::size_t k) const {
  Eigen::MatrixXd m(rows_, cols_);
  for (Eigen::Index r = 0; r < rows_; ++r) {
    for (Eigen::Index c = 0; c < cols_; ++c) m(r, c) = at(k, r, c);
  }
  return m;
}

void AtomMatrices::set(std::size_t k, const Eigen::MatrixXd& value) {
  for (Eigen::Index r = 0; r < rows_; ++r) {
    for (Eigen::Index c = 0; c < cols_; ++c) at(k, r, c) = value(r, c);
  }
}

double AtomMatrices::sup_norm() const {
  double best = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    double s = 0.0;
    for (Eigen::Index r = 0; r < rows_; ++r) {
      for (Eigen::Index c = 0; c < cols_; ++c) s += at(k, r, c) * at(k, r, c);
    }
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

bool AtomMatrices::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

// KernelSlice ----------------------------------------------------------------

KernelSlice::KernelSlice(std::size_t n, Eigen::Index d)
    : n_(n), d_(d), data_(static_cast<std::size_t>(d * d) * n * n, 0.0) {}

KernelSlice KernelSlice::constant(std::size_t n, const Eigen::MatrixXd& value) {
  KernelSlice out(n, value.rows());
  for (Eigen::Index a = 0; a < value.rows(); ++a) {
    for (Eigen::Index b = 0; b < value.cols(); ++b) {
      auto p = out.plane(a, b);
      std::fill(p.begin(), p.end(), value(a, b));
    }
  }
  return out;
}

Eigen::MatrixXd KernelSlice::block(std::size_t j, std::size_t k) const {
  Eigen::MatrixXd m(d_, d_);
  for (Eigen::Index a = 0; a < d_; ++a) {
    for (Eigen::Index b = 0; b < d_; ++b) m(a, b) = at(j, k, a, b);
  }
  return m;
}

void KernelSlice::set_block(std::size_t j, std::size_t k, const Eigen::MatrixXd& value) {
  for (Eigen::Index a = 0; a < d_; ++a) {
    for (Eigen::Index b = 0; b < d_; ++b) at(j, k, a, b) = value(a, b);
  }
}

void KernelSlice::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool KernelSlice::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

bool KernelSlice::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double KernelSlice::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

KernelSlice& KernelSlice::operator+=(const KernelSlice& other) {
  simd::kernels().axpy(1.0, other.data_, data_);
  return *this;
}

KernelSlice& KernelSlice::operator-=(const KernelSlice& other) {
  simd::kernels().axpy(-1.0, other.data_, data_);
  return *this;
}

KernelSlice& KernelSlice::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

void KernelSlice::add_outer(Eigen::Index a, Eigen::Index b, std::span<const double> x,
                            std::span<const double> y) {
  const auto& kt = simd::kernels();
  for (std::size_t j = 0; j < n_; ++j) {
    if (x[j] != 0.0) kt.axpy(x[j], y, row(a, b, j));
  }
}

KernelSlice operator-(KernelSlice lhs, const KernelSlice& rhs) {
  lhs -= rhs;
  return lhs;
}

KernelSlice operator+(KernelSlice lhs, const KernelSlice& rhs) {
  lhs += rhs;
  return lhs;
}

// Integrals ------------------------------------------------------------------

SliceIntegrals slice_integrals(const KernelSlice& g, const MeasureAtoms& m) {
  const std::size_t n = m.size();
  const Eigen::Index d = m.d();
  const Eigen::Index dp = m.d_prime();
  const auto& kt = simd::kernels();
  SliceIntegrals out{AtomMatrices(n, dp, d), AtomMatrices(n, d, dp), Eigen::MatrixXd::Zero(dp, dp)};
  // col_{cb}[k] = sum_j sum_a w_j(a,c) Gamma_ab(j,k)
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index c = 0; c < dp; ++c) {
      const auto w = m.weight_entries(a, c);
      for (Eigen::Index b = 0; b < d; ++b) {
        auto dst = out.col.plane(c, b);
        for (std::size_t j = 0; j < n; ++j) {
          if (w[j] != 0.0) kt.axpy(w[j], g.row(a, b, j), dst);
        }
      }
    }
  }
  // row_{ac}[j] = sum_k sum_b Gamma_ab(j,k) w_k(b,c)
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index c = 0; c < dp; ++c) {
      auto dst = out.row.plane(a, c);
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (Eigen::Index b = 0; b < d; ++b) s += kt.dot(g.row(a, b, j), m.weight_entries(b, c));
        dst[j] = s;
      }
    }
  }
  // total_{ce} = sum_k sum_b col_{cb}[k] w_k(b,e)
  for (Eigen::Index c = 0; c < dp; ++c) {
    for (Eigen::Index e = 0; e < dp; ++e) {
      double s = 0.0;
      for (Eigen::Index b = 0; b < d; ++b) s += kt.dot(out.col.plane(c, b), m.weight_entries(b, e));
      out.total(c, e) = s;
    }
  }
  return out;
}

Eigen::MatrixXd double_integral(const KernelSlice& g, const MeasureAtoms& m) {
  return slice_integrals(g, m).total;
}

// KernelField ----------------------------------------------------------------

KernelField::KernelField(std::shared_ptr<const MeasureAtoms> measure, TimeGrid grid)
    : measure_(std::move(measure)), grid_(grid) {
  if (!measure_) throw ConfigError("kernel field: null measure");
  if (grid_.steps < 1 || !(grid_.horizon > 0.0)) {
    throw ConfigError("kernel field: need at least one time step and T > 0");
  }
  slices_.assign(grid_.steps + 1, KernelSlice(measure_->size(), measure_->d()));
}

bool KernelField::all_finite() const {
  return std::all_of(slices_.begin(), slices_.end(),
                     [](const KernelSlice& s) { return s.all_finite(); });
}

TestFunction TestFunction::constant(std::size_t n, const Eigen::VectorXd& v) {
  TestFunction f;
  f.values = v.transpose().replicate(static_cast<Eigen::Index>(n), 1);
  return f;
}

// Norms ----------------------------------------------------------------------

namespace {

// |Gamma(j,k)| for all pairs, row-major n x n.
std::vector<double> block_norms(const KernelSlice& g) {
  const std::size_t nn = g.n() * g.n();
  if (g.d() == 1) {
    const auto p = g.plane(0, 0);
    std::vector<double> out(nn);
    std::transform(p.begin(), p.end(), out.begin(), [](double x) { return std::abs(x); });
    return out;
  }
  std::vector<double> acc(nn, 0.0);
  const auto& kt = simd::kernels();
  for (Eigen::Index a = 0; a < g.d(); ++a) {
    for (Eigen::Index b = 0; b < g.d(); ++b) kt.square_accumulate(g.plane(a, b), acc);
  }
  for (double& x : acc) x = std::sqrt(x);
  return acc;
}

double weighted_l1(const std::vector<double>& norms, const MeasureAtoms& m) {
  const std::size_t n = m.size();
  const auto& w = m.abs_weights();
  const auto& kt = simd::kernels();
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (w[j] == 0.0) continue;
    s += w[j] * kt.weighted_abs_sum(w, std::span<const double>(norms.data() + j * n, n));
  }
  return s;
}

void check_same_shape(const KernelSlice& a, const KernelSlice& b) {
  if (a.n() != b.n() || a.d() != b.d()) throw ConfigError("kernel slices differ in shape");
}

}  // namespace

double l1_norm(const KernelSlice& g, const MeasureAtoms& m) {
  return weighted_l1(block_norms(g), m);
}

double l1_norm(const KernelField& f, std::size_t s) { return l1_norm(f.slice(s), f.measure()); }

double row_bound(const KernelSlice& g, const MeasureAtoms& m) {
  const auto norms = block_norms(g);
  const std::size_t n = m.size();
  const auto& kt = simd::kernels();
  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    best = std::max(best, kt.weighted_abs_sum(m.abs_weights(),
                                              std::span<const double>(norms.data() + j * n, n)));
  }
  return best;
}

double col_bound(const KernelSlice& g, const MeasureAtoms& m) {
  const auto norms = block_norms(g);
  const std::size_t n = m.size();
  std::vector<double> cols(n, 0.0);
  const auto& kt = simd::kernels();
  for (std::size_t j = 0; j < n; ++j) {
    kt.axpy(m.abs_weights()[j], std::span<const double>(norms.data() + j * n, n), cols);
  }
  return cols.empty() ? 0.0 : *std::max_element(cols.begin(), cols.end());
}

double l1_distance(const KernelSlice& a, const KernelSlice& b, const MeasureAtoms& m) {
  check_same_shape(a, b);
  return l1_norm(a - b, m);
}

double sup_l1_distance(const KernelField& a, const KernelField& b) {
  if (a.steps() != b.steps() || a.n() != b.n() || a.d() != b.d()) {
    throw ConfigError("sup_l1_distance: fields live on different grids");
  }
  double best = 0.0;
  for (std::size_t s = 0; s <= a.steps(); ++s) {
    best = std::max(best, l1_distance(a.slice(s), b.slice(s), a.measure()));
  }
  return best;
}

// Pairings -------------------------------------------------------------------

double dual_pairing(const TestFunction& phi, const TestFunction& psi, const MeasureAtoms& m) {
  if (phi.size() != m.size() || psi.size() != m.size() || phi.dim() != m.d_prime() ||
      psi.dim() != m.d()) {
    throw ConfigError("dual_pairing: test functions do not match the measure dimensions");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    s += phi.values.row(i) * m.weight(k).transpose() * psi.values.row(i).transpose();
  }
  return s;
}

TestFunction apply_operator(const KernelSlice& g, const MeasureAtoms& m, const TestFunction& phi) {
  const std::size_t n = m.size();
  if (phi.size() != n || phi.dim() != m.d_prime() || g.n() != n || g.d() != m.d()) {
    throw ConfigError("apply_operator: dimension mismatch");
  }
  const Eigen::Index d = m.d();
  // z_b[k] = (w_k phi_k)_b
  std::vector<std::vector<double>> z(static_cast<std::size_t>(d), std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::VectorXd wk = m.weight(k) * phi.values.row(static_cast<Eigen::Index>(k)).transpose();
    for (Eigen::Index b = 0; b < d; ++b) z[static_cast<std::size_t>(b)][k] = wk(b);
  }
  const auto& kt = simd::kernels();
  TestFunction out;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), d);
  for (std::size_t j = 0; j < n; ++j) {
    for (Eigen::Index a = 0; a < d; ++a) {
      double s = 0.0;
      for (Eigen::Index b = 0; b < d; ++b) s += kt.dot(g.row(a, b, j), z[static_cast<std::size_t>(b)]);
      out.values(static_cast<Eigen::Index>(j), a) = s;
    }
  }
  return out;
}

TestFunction apply_operator(const KernelField& f, std::size_t s, const TestFunction& phi) {
  return apply_operator(f.slice(s), f.measure(), phi);
}

namespace {

Eigen::MatrixXd raw_gram(const KernelSlice& g, const MeasureAtoms& m) {
  const std::size_t n = m.size();
  const Eigen::Index dp = m.d_prime();
  const auto nd = static_cast<Eigen::Index>(n) * dp;
  Eigen::MatrixXd gram(nd, nd);
  if (m.d() == 1 && dp == 1) {
    const auto p = g.plane(0, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const double wj = m.weight(j)(0, 0);
      for (std::size_t k = 0; k < n; ++k) {
        gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
            wj * p[j * n + k] * m.weight(k)(0, 0);
      }
    }
    return gram;
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      gram.block(static_cast<Eigen::Index>(j) * dp, static_cast<Eigen::Index>(k) * dp, dp, dp) =
          m.weight(j).transpose() * g.block(j, k) * m.weight(k);
    }
  }
  return gram;
}

Eigen::VectorXd flatten(const TestFunction& f) {
  Eigen::VectorXd v(f.values.size());
  for (Eigen::Index k = 0; k < f.values.rows(); ++k) {
    v.segment(k * f.values.cols(), f.values.cols()) = f.values.row(k).transpose();
  }
  return v;
}

}  // namespace

double quadratic_form(const KernelSlice& g, const MeasureAtoms& m, const TestFunction& phi) {
  if (phi.size() != m.size() || phi.dim() != m.d_prime()) {
    throw ConfigError("quadratic_form: dimension mismatch");
  }
  const Eigen::VectorXd v = flatten(phi);
  return v.dot(raw_gram(g, m) * v);
}

Eigen::MatrixXd gram_matrix(const KernelSlice& g, const MeasureAtoms& m) {
  const Eigen::MatrixXd raw = raw_gram(g, m);
  return 0.5 * (raw + raw.transpose());
}

double symmetric_defect(const KernelSlice& g) {
  const std::size_t n = g.n();
  const Eigen::Index d = g.d();
  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j; k < n; ++k) {
      double s = 0.0;
      for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
          const double diff = g.at(j, k, a, b) - g.at(k, j, b, a);
          s += diff * diff;
        }
      }
      best = std::max(best, std::sqrt(s));
    }
  }
  return best;
}

PsdCheckResult check_symmetric_nonnegative(const KernelSlice& g, const MeasureAtoms& m, double tol) {
  if (g.n() != m.size() || g.d() != m.d()) {
    throw ConfigError("check_symmetric_nonnegative: slice does not match the measure");
  }
  PsdCheckResult r;
  r.symmetric_defect = symmetric_defect(g);
  if (m.size() == 0) {
    r.passed = r.symmetric_defect <= tol;
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_matrix(g, m), Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.passed = r.symmetric_defect <= tol && r.min_eigenvalue >= -tol;
  return r;
}

PsdCheckResult check_symmetric_nonnegative(const KernelField& f, std::size_t s, double tol) {
  return check_symmetric_nonnegative(f.slice(s), f.measure(), tol);
}

double default_psd_tolerance(const KernelSlice& g, const MeasureAtoms& m) {
  return 1e-8 * (1.0 + l1_norm(g, m));
}

bool order_compare(const KernelField& f, const KernelField& g, std::size_t s, double tol) {
  if (f.steps() != g.steps() || f.n() != g.n() || f.d() != g.d()) {
    throw ConfigError("order_compare: fields live on different grids");
  }
  return check_symmetric_nonnegative(f.slice(s) - g.slice(s), f.measure(), tol).passed;
}

CauchySchwarzResult cauchy_schwarz_check(const KernelSlice& g, const MeasureAtoms& m,
                                         std::size_t trials, std::uint64_t seed) {
  CauchySchwarzResult r;
  r.trials = trials;
  if (m.size() == 0) return r;
  const Eigen::MatrixXd gram = raw_gram(g, m);
  const double l1 = l1_norm(g, m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto dim = gram.rows();
  Eigen::VectorXd phi(dim), psi(dim);
  for (std::size_t t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < dim; ++i) phi(i) = normal(rng);
    for (Eigen::Index i = 0; i < dim; ++i) psi(i) = normal(rng);
    const double cross = phi.dot(gram * psi);
    const double violation = cross * cross - phi.dot(gram * phi) * psi.dot(gram * psi);
    const double scale = l1 * phi.cwiseAbs().maxCoeff() * psi.cwiseAbs().maxCoeff();
    r.max_violation = t == 0 ? violation : std::max(r.max_violation, violation);
    const double rel = scale > 0.0 ? violation / (scale * scale) : 0.0;
    r.max_relative_violation = t == 0 ? rel : std::max(r.max_relative_violation, rel);
  }
  return r;
}

}  // namespace kric
