#include "kric/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "kric/errors.hpp"
#include "stepper.hpp"

namespace kric {

namespace {

std::function<AtomMatrices(double)> constant_atoms(const AtomMatrices& value) {
  bool zero = true;
  for (Eigen::Index r = 0; r < value.rows() && zero; ++r) {
    for (Eigen::Index c = 0; c < value.cols() && zero; ++c) {
      for (double x : value.plane(r, c)) zero = zero && x == 0.0;
    }
  }
  if (zero) return {};
  return [value](double) { return value; };
}

void check_atoms(const AtomMatrices& a, const MeasureAtoms& m, const char* name) {
  if (a.size() != m.size() || a.rows() != m.d_prime() || a.cols() != m.d()) {
    throw ConfigError(std::string("lyapunov coefficient ") + name + " must hold " +
                      std::to_string(m.size()) + " matrices of shape " +
                      std::to_string(m.d_prime()) + "x" + std::to_string(m.d()));
  }
  if (!a.all_finite()) {
    throw NumericalError(std::string("lyapunov coefficient ") + name + " is not finite");
  }
}

}  // namespace

LyapunovCoefficients LyapunovCoefficients::constant(std::size_t n, const Eigen::MatrixXd& q,
                                                    const Eigen::MatrixXd& b,
                                                    const Eigen::MatrixXd& dmat) {
  return constant(KernelSlice::constant(n, q), AtomMatrices::constant(n, b),
                  AtomMatrices::constant(n, dmat));
}

LyapunovCoefficients LyapunovCoefficients::constant(const KernelSlice& q, const AtomMatrices& b,
                                                    const AtomMatrices& dmat) {
  LyapunovCoefficients c;
  if (!q.is_zero()) {
    c.qtilde = [q](double, KernelSlice& out) { out = q; };
  }
  c.btilde1 = c.btilde2 = constant_atoms(b);
  c.dtilde1 = c.dtilde2 = constant_atoms(dmat);
  c.symmetric = symmetric_defect(q) == 0.0;
  return c;
}

CoefficientSnapshot evaluate_coefficients(const LyapunovCoefficients& c, const MeasureAtoms& m,
                                          double t) {
  CoefficientSnapshot snap;
  snap.qtilde = KernelSlice(m.size(), m.d());
  if (c.qtilde) {
    c.qtilde(t, snap.qtilde);
    if (snap.qtilde.n() != m.size() || snap.qtilde.d() != m.d()) {
      throw ConfigError("lyapunov coefficient Qtilde has the wrong shape");
    }
    if (!snap.qtilde.all_finite()) throw NumericalError("lyapunov coefficient Qtilde is not finite");
  }
  auto fill = [&](const std::function<AtomMatrices(double)>& fn, AtomMatrices& dst, bool& flag,
                  const char* name) {
    if (!fn) return;
    dst = fn(t);
    check_atoms(dst, m, name);
    flag = true;
  };
  fill(c.btilde1, snap.b1, snap.has_b1, "Btilde1");
  fill(c.btilde2, snap.b2, snap.has_b2, "Btilde2");
  fill(c.dtilde1, snap.d1, snap.has_d1, "Dtilde1");
  fill(c.dtilde2, snap.d2, snap.has_d2, "Dtilde2");
  return snap;
}

void lyapunov_rhs(const MeasureAtoms& m, const CoefficientSnapshot& c, const KernelSlice& psi,
                  KernelSlice& out) {
  if (psi.n() != m.size() || psi.d() != m.d()) {
    throw ConfigError("lyapunov_rhs: slice does not match the measure");
  }
  out = c.qtilde;
  const bool quad = c.has_d1 && c.has_d2;
  if (!quad && !c.has_b1 && !c.has_b2) return;

  const std::size_t n = m.size();
  const Eigen::Index d = m.d();
  const Eigen::Index dp = m.d_prime();
  const SliceIntegrals in = slice_integrals(psi, m);

  if (quad) {
    std::vector<double> x(n);
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index e = 0; e < dp; ++e) {
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (Eigen::Index c2 = 0; c2 < dp; ++c2) s += c.d1.at(j, c2, a) * in.total(c2, e);
          x[j] = s;
        }
        for (Eigen::Index b = 0; b < d; ++b) out.add_outer(a, b, x, c.d2.plane(e, b));
      }
    }
  }
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      for (Eigen::Index c2 = 0; c2 < dp; ++c2) {
        if (c.has_b1) out.add_outer(a, b, c.b1.plane(c2, a), in.col.plane(c2, b));
        if (c.has_b2) out.add_outer(a, b, in.row.plane(a, c2), c.b2.plane(c2, b));
      }
    }
  }
}

double coefficient_bound(const LyapunovCoefficients& c, const MeasureAtoms& m,
                         const TimeGrid& grid) {
  double kappa = 0.0;
  for (std::size_t s = 0; s <= grid.steps; ++s) {
    const double t = grid.time(s);
    auto sup = [&](const std::function<AtomMatrices(double)>& fn) {
      return fn ? fn(t).sup_norm() : 0.0;
    };
    kappa = std::max({kappa, sup(c.btilde1), sup(c.btilde2), sup(c.dtilde1) * sup(c.dtilde2)});
    if (!c.btilde1 && !c.btilde2 && !c.dtilde1 && !c.dtilde2) break;
  }
  (void)m;
  return kappa;
}

std::string to_string(LyapunovMethod m) {
  return m == LyapunovMethod::picard_contraction ? "picard_contraction" : "exponential_integrator";
}

LyapunovMethod lyapunov_method_from_string(const std::string& s) {
  if (s == "exponential_integrator" || s == "exponential") {
    return LyapunovMethod::exponential_integrator;
  }
  if (s == "picard_contraction" || s == "picard") return LyapunovMethod::picard_contraction;
  throw ConfigError("unknown lyapunov method '" + s + "'");
}

double default_picard_lambda(const LyapunovCoefficients& coeffs, const MeasureAtoms& m,
                             const TimeGrid& grid) {
  const double kappa = coefficient_bound(coeffs, m, grid);
  return 4.0 * kappa *
         (1.0 + bar_kernel_l1(m, grid.horizon) + bar_kernel_l2_squared(m, grid.horizon));
}

namespace {

// Caches the snapshot of the most recently requested grid index.
class SnapshotCache {
 public:
  SnapshotCache(const LyapunovCoefficients& c, const MeasureAtoms& m, const TimeGrid& g)
      : coeffs_(c), m_(m), grid_(g) {}

  const CoefficientSnapshot& at(std::size_t s) {
    if (s != index_) {
      snap_ = evaluate_coefficients(coeffs_, m_, grid_.time(s));
      index_ = s;
    }
    return snap_;
  }

 private:
  const LyapunovCoefficients& coeffs_;
  const MeasureAtoms& m_;
  TimeGrid grid_;
  std::size_t index_ = static_cast<std::size_t>(-1);
  CoefficientSnapshot snap_;
};

void validate_options(std::size_t steps, double horizon) {
  if (steps < 1) throw ConfigError("time_steps must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon T must be positive");
}

void fill_norms(const KernelField& f, LyapunovReport& r) {
  for (std::size_t s = 0; s <= f.steps(); ++s) {
    r.sup_l1_norm = std::max(r.sup_l1_norm, l1_norm(f, s));
    r.row_bound = std::max(r.row_bound, row_bound(f.slice(s), f.measure()));
    r.col_bound = std::max(r.col_bound, col_bound(f.slice(s), f.measure()));
  }
}

}  // namespace

LyapunovSolution solve_lyapunov(std::shared_ptr<const MeasureAtoms> m,
                                const LyapunovCoefficients& coeffs, double horizon,
                                const LyapunovSolveOptions& opts) {
  validate_options(opts.time_steps, horizon);
  if (!(opts.inner_tol > 0.0) || !(opts.picard_tol > 0.0)) {
    throw ConfigError("lyapunov tolerances must be positive");
  }
  const TimeGrid grid{horizon, opts.time_steps};
  LyapunovReport report;
  report.method = opts.method;
  report.steps = opts.time_steps;

  SnapshotCache cache(coeffs, *m, grid);
  const MeasureAtoms& mm = *m;
  detail::RhsFn rhs = [&](std::size_t s, const KernelSlice& psi, KernelSlice& out) {
    lyapunov_rhs(mm, cache.at(s), psi, out);
  };

  if (opts.method == LyapunovMethod::exponential_integrator) {
    KernelField field(m, grid);
    const auto stats = detail::backward_solve(field, rhs, opts.inner_tol, opts.inner_max_iter);
    report.iterations = stats.total_inner;
    report.max_inner_iterations = stats.max_inner;
    report.residual = stats.residual;
    report.step_error_estimate = stats.step_error;
    fill_norms(field, report);
    return {std::move(field), report};
  }

  const double lambda =
      opts.picard_lambda >= 0.0 ? opts.picard_lambda : default_picard_lambda(coeffs, *m, grid);
  PicardResult pr = picard_iterate(m, coeffs, horizon, lambda, opts.picard_tol,
                                   opts.picard_max_iter, opts.time_steps, opts.fail_on_expansion);
  report.iterations = pr.trace.differences.size();
  report.residual = detail::mild_residual(pr.field, rhs);
  // The estimate is a property of the discretization, not of the solver.
  {
    KernelField probe(m, grid);
    SnapshotCache c2(coeffs, *m, grid);
    detail::RhsFn rhs2 = [&](std::size_t s, const KernelSlice& psi, KernelSlice& out) {
      lyapunov_rhs(mm, c2.at(s), psi, out);
    };
    report.step_error_estimate =
        detail::backward_solve(probe, rhs2, opts.inner_tol, opts.inner_max_iter).step_error;
  }
  fill_norms(pr.field, report);
  return {std::move(pr.field), report};
}

PicardResult picard_iterate(std::shared_ptr<const MeasureAtoms> m,
                            const LyapunovCoefficients& coeffs, double horizon, double lambda,
                            double tol, std::size_t max_iter, std::size_t time_steps,
                            bool fail_on_expansion) {
  validate_options(time_steps, horizon);
  if (!(lambda >= 0.0)) throw ConfigError("picard lambda must be >= 0");
  if (!(tol > 0.0)) throw ConfigError("picard tolerance must be positive");
  const TimeGrid grid{horizon, time_steps};
  const MeasureAtoms& mm = *m;

  // Coefficients are re-read on every sweep, so freeze them once.
  std::vector<CoefficientSnapshot> snaps;
  snaps.reserve(grid.steps + 1);
  for (std::size_t s = 0; s <= grid.steps; ++s) {
    snaps.push_back(evaluate_coefficients(coeffs, mm, grid.time(s)));
  }
  detail::RhsFn rhs = [&](std::size_t s, const KernelSlice& psi, KernelSlice& out) {
    lyapunov_rhs(mm, snaps[s], psi, out);
  };

  PicardResult result{KernelField(m, grid), PicardTrace{}};
  result.trace.lambda = lambda;
  KernelField next(m, grid);
  auto weighted_sup = [&](const KernelField& a, const KernelField* b) {
    double best = 0.0;
    for (std::size_t s = 0; s <= grid.steps; ++s) {
      const double w = std::exp(-lambda * (horizon - grid.time(s)));
      const double v = b ? l1_distance(a.slice(s), b->slice(s), mm) : l1_norm(a.slice(s), mm);
      best = std::max(best, w * v);
    }
    return best;
  };

  for (std::size_t k = 0; k < max_iter; ++k) {
    detail::picard_sweep(result.field, next, rhs);
    const double diff = weighted_sup(next, &result.field);
    auto& tr = result.trace;
    if (!tr.differences.empty()) {
      const double prev = tr.differences.back();
      const double ratio = prev > 0.0 ? diff / prev : 0.0;
      tr.ratios.push_back(ratio);
      if (fail_on_expansion && ratio >= 1.0) {
        const double suggestion =
            std::max(2.0 * lambda, default_picard_lambda(coeffs, mm, grid));
        throw NonContractionError("picard iteration is not contracting for lambda=" +
                                      std::to_string(lambda) + " (ratio " +
                                      std::to_string(ratio) + "); try lambda >= " +
                                      std::to_string(suggestion),
                                  suggestion);
      }
    }
    tr.differences.push_back(diff);
    std::swap(result.field, next);
    const double scale = std::max(1.0, weighted_sup(result.field, nullptr));
    if (diff <= tol * scale) {
      tr.converged = true;
      return result;
    }
  }
  throw ConvergenceError("picard iteration did not reach tolerance within " +
                         std::to_string(max_iter) + " sweeps");
}

std::vector<double> continuity_modulus(const KernelField& f) {
  std::vector<double> out(f.steps());
  for (std::size_t s = 0; s < f.steps(); ++s) {
    out[s] = l1_distance(f.slice(s + 1), f.slice(s), f.measure());
  }
  return out;
}

std::vector<Eigen::MatrixXd> double_integral_path(const KernelField& f) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(f.steps() + 1);
  for (std::size_t s = 0; s <= f.steps(); ++s) out.push_back(double_integral(f.slice(s), f.measure()));
  return out;
}

}  // namespace kric
