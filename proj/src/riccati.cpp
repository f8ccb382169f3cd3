#include "kric/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kric/errors.hpp"
#include "kric/simd/kernels.hpp"
#include "stepper.hpp"

namespace kric {

// LQCoefficients -------------------------------------------------------------

void LQCoefficients::validate(const MeasureAtoms& mu) const {
  const Eigen::Index d = mu.d();
  const Eigen::Index dp = mu.d_prime();
  const Eigen::Index mm = N.rows();
  auto shape = [](const Eigen::MatrixXd& x, Eigen::Index r, Eigen::Index c, const char* name) {
    if (x.rows() != r || x.cols() != c) {
      std::ostringstream os;
      os << "LQ coefficient " << name << " is " << x.rows() << "x" << x.cols() << ", expected "
         << r << "x" << c;
      throw ConfigError(os.str());
    }
    if (!x.allFinite()) throw ConfigError(std::string("LQ coefficient ") + name + " is not finite");
  };
  if (mm < 1) throw ConfigError("LQ coefficient N must be at least 1x1");
  shape(B, dp, d, "B");
  shape(D, dp, d, "D");
  shape(C, dp, mm, "C");
  shape(F, dp, mm, "F");
  shape(Q, d, d, "Q");
  shape(N, mm, mm, "N");
  if (!(lambda_margin > 0.0) || !std::isfinite(lambda_margin)) {
    throw ConfigError("lambda_margin must be positive");
  }
  const double qs = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  if (qs > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff())) throw ConfigError("Q must be symmetric");
  const double ns = (N - N.transpose()).cwiseAbs().maxCoeff();
  if (ns > 1e-12 * (1.0 + N.cwiseAbs().maxCoeff())) throw ConfigError("N must be symmetric");
  const Eigen::MatrixXd qsym = 0.5 * (Q + Q.transpose());
  const double qmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(qsym).eigenvalues().minCoeff();
  if (qmin < -1e-12 * (1.0 + Q.norm())) {
    throw ConfigError("Q must be positive semidefinite (min eigenvalue " + std::to_string(qmin) +
                      ")");
  }
  const Eigen::MatrixXd nsym = 0.5 * (N + N.transpose());
  const double nmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(nsym).eigenvalues().minCoeff();
  if (nmin < lambda_margin * (1.0 - 1e-12)) {
    throw ConfigError("N - lambda_margin I must be positive semidefinite (min eigenvalue of N " +
                      std::to_string(nmin) + " < " + std::to_string(lambda_margin) + ")");
  }
}

LQCoefficients LQCoefficients::scalar(double b, double c, double d, double f, double q, double n,
                                      double lambda) {
  auto one = [](double x) { return Eigen::MatrixXd::Constant(1, 1, x); };
  LQCoefficients lq;
  lq.B = one(b);
  lq.C = one(c);
  lq.D = one(d);
  lq.F = one(f);
  lq.Q = one(q);
  lq.N = one(n);
  lq.lambda_margin = lambda;
  return lq;
}

double FeedbackField::sup_norm() const {
  double best = 0.0;
  for (const auto& v : values) best = std::max(best, v.sup_norm());
  return best;
}

// Core algebra -----------------------------------------------------------------

namespace {

struct RiccatiTerms {
  SliceIntegrals in;
  Eigen::MatrixXd nhat;
  double min_eig = 0.0;
  AtomMatrices s;      // m x d
  AtomMatrices theta;  // m x d
};

Eigen::MatrixXd nhat_from_u(const LQCoefficients& lq, const Eigen::MatrixXd& u) {
  Eigen::MatrixXd nh = lq.N + lq.F.transpose() * u * lq.F;
  return 0.5 * (nh + nh.transpose());
}

RiccatiTerms riccati_terms(const MeasureAtoms& mu, const LQCoefficients& lq, const KernelSlice& g,
                           double floor, double t) {
  if (g.n() != mu.size() || g.d() != mu.d()) {
    throw ConfigError("riccati: kernel slice does not match the measure");
  }
  const std::size_t n = mu.size();
  const Eigen::Index d = mu.d();
  const Eigen::Index dp = mu.d_prime();
  const Eigen::Index mm = lq.m();
  const auto& kt = simd::kernels();

  RiccatiTerms r{slice_integrals(g, mu), {}, 0.0, AtomMatrices(n, mm, d), AtomMatrices(n, mm, d)};
  r.nhat = nhat_from_u(lq, r.in.total);
  r.min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.nhat, Eigen::EigenvaluesOnly)
                  .eigenvalues()
                  .minCoeff();
  if (!(r.min_eig >= floor)) {
    std::ostringstream os;
    os << "effective control cost Nhat has min eigenvalue " << r.min_eig << " below the floor "
       << floor;
    if (!std::isnan(t)) os << " at t=" << t;
    os << "; the discretization is too coarse or the data violate the assumptions";
    throw FeedbackFloorError(os.str(), t, r.min_eig);
  }
  const Eigen::MatrixXd fud = lq.F.transpose() * r.in.total * lq.D;
  for (Eigen::Index p = 0; p < mm; ++p) {
    for (Eigen::Index b = 0; b < d; ++b) {
      auto dst = r.s.plane(p, b);
      std::fill(dst.begin(), dst.end(), fud(p, b));
      for (Eigen::Index c = 0; c < dp; ++c) {
        if (lq.C(c, p) != 0.0) kt.axpy(lq.C(c, p), r.in.col.plane(c, b), dst);
      }
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(r.nhat);
  if (llt.info() != Eigen::Success) {
    throw FeedbackFloorError("Nhat is not positive definite", t, r.min_eig);
  }
  const Eigen::MatrixXd ninv = llt.solve(Eigen::MatrixXd::Identity(mm, mm));
  for (Eigen::Index p = 0; p < mm; ++p) {
    for (Eigen::Index b = 0; b < d; ++b) {
      auto dst = r.theta.plane(p, b);
      for (Eigen::Index q = 0; q < mm; ++q) kt.axpy(-ninv(p, q), r.s.plane(q, b), dst);
    }
  }
  return r;
}

void fill_constant(KernelSlice& out, const Eigen::MatrixXd& value) {
  for (Eigen::Index a = 0; a < value.rows(); ++a) {
    for (Eigen::Index b = 0; b < value.cols(); ++b) {
      auto p = out.plane(a, b);
      std::fill(p.begin(), p.end(), value(a, b));
    }
  }
}

double riccati_rhs_impl(const MeasureAtoms& mu, const LQCoefficients& lq, const KernelSlice& g,
                        KernelSlice& out, double floor, double t) {
  const RiccatiTerms r = riccati_terms(mu, lq, g, floor, t);
  const std::size_t n = mu.size();
  const Eigen::Index d = mu.d();
  const Eigen::Index dp = mu.d_prime();
  const Eigen::Index mm = lq.m();
  const auto& kt = simd::kernels();
  if (out.n() != n || out.d() != d) out = KernelSlice(n, d);

  fill_constant(out, lq.Q + lq.D.transpose() * r.in.total * lq.D);
  std::vector<double> buf(n);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      // B^T V(k): constant along j.
      std::fill(buf.begin(), buf.end(), 0.0);
      for (Eigen::Index c = 0; c < dp; ++c) {
        if (lq.B(c, a) != 0.0) kt.axpy(lq.B(c, a), r.in.col.plane(c, b), buf);
      }
      for (std::size_t j = 0; j < n; ++j) kt.axpy(1.0, buf, out.row(a, b, j));
      // W(j) B: constant along k.
      for (std::size_t j = 0; j < n; ++j) {
        double x = 0.0;
        for (Eigen::Index c = 0; c < dp; ++c) x += r.in.row.at(j, a, c) * lq.B(c, b);
        if (x != 0.0) {
          for (double& v : out.row(a, b, j)) v += x;
        }
      }
      // -S(j)^T Nhat^{-1} S(k) = S(j)^T Theta(k).
      for (Eigen::Index p = 0; p < mm; ++p) out.add_outer(a, b, r.s.plane(p, a), r.theta.plane(p, b));
    }
  }
  return r.min_eig;
}

double default_floor(const LQCoefficients& lq, double floor) {
  return floor < 0.0 ? 0.5 * lq.lambda_margin : floor;
}

}  // namespace

Eigen::MatrixXd nhat(const MeasureAtoms& mu, const LQCoefficients& lq, const KernelSlice& g) {
  return nhat_from_u(lq, double_integral(g, mu));
}

AtomMatrices theta_feedback(const MeasureAtoms& mu, const LQCoefficients& lq,
                            const KernelSlice& g, double floor, double t) {
  return riccati_terms(mu, lq, g, floor, t).theta;
}

void riccati_rhs(const MeasureAtoms& mu, const LQCoefficients& lq, const KernelSlice& g,
                 KernelSlice& out, double floor, double t) {
  riccati_rhs_impl(mu, lq, g, out, floor, t);
}

namespace {

FeedbackField theta_field_impl(const LQCoefficients& lq, const KernelField& g, double floor,
                               double* min_eig) {
  FeedbackField out{g.grid(), {}};
  out.values.reserve(g.steps() + 1);
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s <= g.steps(); ++s) {
    RiccatiTerms r = riccati_terms(g.measure(), lq, g.slice(s), floor, g.grid().time(s));
    lowest = std::min(lowest, r.min_eig);
    out.values.push_back(std::move(r.theta));
  }
  if (min_eig) *min_eig = lowest;
  return out;
}

}  // namespace

FeedbackField theta_field(const LQCoefficients& lq, const KernelField& g, double floor) {
  return theta_field_impl(lq, g, default_floor(lq, floor), nullptr);
}

LyapunovCoefficients feedback_coefficients(const LQCoefficients& lq, const MeasureAtoms& mu,
                                           std::shared_ptr<const FeedbackField> theta) {
  const std::size_t n = mu.size();
  if (!theta) return LyapunovCoefficients::constant(n, lq.Q, lq.B, lq.D);
  if (theta->values.empty()) throw ConfigError("feedback field is empty");
  const Eigen::Index mm = lq.m();

  LyapunovCoefficients c;
  c.symmetric = true;
  c.qtilde = [lq, theta, n, mm](double t, KernelSlice& out) {
    const AtomMatrices& th = theta->values[theta->grid.nearest_index(t)];
    const Eigen::Index d = lq.d();
    if (out.n() != n || out.d() != d) out = KernelSlice(n, d);
    fill_constant(out, lq.Q);
    std::vector<double> y(n);
    for (Eigen::Index q = 0; q < mm; ++q) {
      for (Eigen::Index a = 0; a < d; ++a) {
        std::fill(y.begin(), y.end(), 0.0);
        for (Eigen::Index p = 0; p < mm; ++p) {
          if (lq.N(p, q) != 0.0) simd::kernels().axpy(lq.N(p, q), th.plane(p, a), y);
        }
        for (Eigen::Index b = 0; b < d; ++b) out.add_outer(a, b, y, th.plane(q, b));
      }
    }
  };
  auto closed_loop = [n, mm, theta](const Eigen::MatrixXd& base, const Eigen::MatrixXd& gain) {
    return [n, mm, theta, base, gain](double t) {
      const AtomMatrices& th = theta->values[theta->grid.nearest_index(t)];
      AtomMatrices r = AtomMatrices::constant(n, base);
      for (Eigen::Index row = 0; row < base.rows(); ++row) {
        for (Eigen::Index col = 0; col < base.cols(); ++col) {
          auto dst = r.plane(row, col);
          for (Eigen::Index p = 0; p < mm; ++p) {
            if (gain(row, p) != 0.0) simd::kernels().axpy(gain(row, p), th.plane(p, col), dst);
          }
        }
      }
      return r;
    };
  };
  if (!lq.B.isZero(0.0) || !lq.C.isZero(0.0)) c.btilde1 = c.btilde2 = closed_loop(lq.B, lq.C);
  if (!lq.D.isZero(0.0) || !lq.F.isZero(0.0)) c.dtilde1 = c.dtilde2 = closed_loop(lq.D, lq.F);
  return c;
}

// Diagnostics -------------------------------------------------------------------

double estimate_report(const KernelField& g) {
  double best = 0.0;
  for (std::size_t s = 0; s <= g.steps(); ++s) best = std::max(best, row_bound(g.slice(s), g.measure()));
  return best;
}

namespace {

double min_eigenvalue(const Eigen::MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  const Eigen::MatrixXd sym = 0.5 * (x + x.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

bool inspected(std::size_t s, std::size_t stride) { return s == 0 || (stride > 0 && s % stride == 0); }

}  // namespace

PropertyChecks check_solution(const KernelField& g, std::size_t stride, double step_error) {
  PropertyChecks c;
  const MeasureAtoms& mu = g.measure();
  c.terminal_zero = g.slice(g.steps()).is_zero();
  double min_scaled = 0.0;
  for (std::size_t s = 0; s <= g.steps(); ++s) {
    if (!inspected(s, stride == 0 ? 1 : stride)) continue;
    const KernelSlice& sl = g.slice(s);
    const double mx = sl.max_abs();
    const double defect = mx > 0.0 ? symmetric_defect(sl) / mx : 0.0;
    c.symmetry_defect = std::max(c.symmetry_defect, defect);
    const double l1 = l1_norm(sl, mu);
    const PsdCheckResult r = check_symmetric_nonnegative(sl, mu, 1e-8 * (1.0 + l1));
    min_scaled = std::min(min_scaled, r.min_eigenvalue / (1.0 + l1));
  }
  c.min_gram_eigenvalue = min_scaled;
  c.symmetry_ok = c.symmetry_defect <= 1e-10;
  c.psd_ok = min_scaled >= -1e-8;

  const auto u = double_integral_path(g);
  for (std::size_t s = 0; s < u.size(); ++s) {
    const double tol = 1e-8 * (1.0 + u[s].norm()) + step_error;
    if (min_eigenvalue(u[s]) < -tol) c.u_time_monotone = false;
    if (s + 1 < u.size() && min_eigenvalue(u[s] - u[s + 1]) < -tol) c.u_time_monotone = false;
  }
  return c;
}

double riccati_mild_residual(const KernelField& g, const LQCoefficients& lq, double floor) {
  const double fl = default_floor(lq, floor);
  const MeasureAtoms& mu = g.measure();
  const TimeGrid grid = g.grid();
  detail::RhsFn rhs = [&](std::size_t s, const KernelSlice& psi, KernelSlice& out) {
    riccati_rhs_impl(mu, lq, psi, out, fl, grid.time(s));
  };
  return detail::mild_residual(g, rhs);
}

// Solvers -------------------------------------------------------------------------

RiccatiSolution solve_riccati_iterative(std::shared_ptr<const MeasureAtoms> mu,
                                        const LQCoefficients& lq, double horizon,
                                        const RiccatiSolveOptions& opts) {
  if (!mu) throw ConfigError("riccati: null measure");
  lq.validate(*mu);
  if (opts.max_outer_iter < 1) throw ConfigError("max_outer_iter must be >= 1");
  const double floor = default_floor(lq, opts.nhat_floor);
  const MeasureAtoms& m = *mu;

  LyapunovSolution cur = solve_lyapunov(mu, feedback_coefficients(lq, m, nullptr), horizon,
                                        opts.lyapunov);
  RiccatiReport report;
  report.method = "iterative";
  report.steps = opts.lyapunov.time_steps;
  report.gamma0_sup_l1 = cur.report.sup_l1_norm;
  report.outer_tol = opts.outer_tol > 0.0 ? opts.outer_tol : 1e-8 * (1.0 + report.gamma0_sup_l1);
  PropertyChecks iter_checks;

  std::shared_ptr<const FeedbackField> theta_prev;
  bool converged = false;
  for (std::size_t i = 0; i < opts.max_outer_iter; ++i) {
    double nmin = 0.0;
    auto theta = std::make_shared<const FeedbackField>(theta_field_impl(lq, cur.field, floor, &nmin));
    iter_checks.min_nhat_eigenvalue = std::min(iter_checks.min_nhat_eigenvalue, nmin);

    LyapunovSolution next =
        solve_lyapunov(mu, feedback_coefficients(lq, m, theta), horizon, opts.lyapunov);
    const double diff = sup_l1_distance(next.field, cur.field);
    report.differences.push_back(diff);

    if (opts.check_stride > 0) {
      const double slack =
          10.0 * std::max(cur.report.step_error_estimate, next.report.step_error_estimate);
      for (std::size_t s = 0; s <= cur.field.steps(); ++s) {
        const Eigen::MatrixXd u_cur = double_integral(cur.field.slice(s), m);
        const Eigen::MatrixXd u_next = double_integral(next.field.slice(s), m);
        if (min_eigenvalue(u_cur - u_next) < -(1e-8 * (1.0 + u_cur.norm()) + slack)) {
          iter_checks.u_iteration_monotone = false;
        }
        if (!inspected(s, opts.check_stride)) continue;
        const double l1 = l1_norm(cur.field, s);
        const PsdCheckResult r = check_symmetric_nonnegative(
            cur.field.slice(s) - next.field.slice(s), m, 1e-8 * (1.0 + l1) + slack);
        iter_checks.worst_order_violation =
            std::min(iter_checks.worst_order_violation, r.min_eigenvalue / (1.0 + l1));
        if (r.min_eigenvalue < -(1e-8 * (1.0 + l1) + slack)) iter_checks.monotone_ok = false;
      }
    }
    if (opts.on_iteration) {
      IterationView view;
      view.index = i;
      view.gamma = &cur.field;
      view.gamma_next = &next.field;
      view.theta_prev = theta_prev.get();
      view.theta = theta.get();
      view.difference = diff;
      view.lyapunov = &next.report;
      opts.on_iteration(view);
    }
    cur = std::move(next);
    theta_prev = std::move(theta);
    if (diff <= report.outer_tol) {
      converged = true;
      break;
    }
  }
  report.outer_iterations = report.differences.size();
  if (!converged) {
    std::ostringstream os;
    os << "outer iteration did not converge in " << opts.max_outer_iter
       << " iterations (last difference " << report.differences.back() << ", tolerance "
       << report.outer_tol << ")";
    throw ConvergenceError(os.str());
  }

  double nmin = 0.0;
  FeedbackField theta = theta_field_impl(lq, cur.field, floor, &nmin);
  iter_checks.min_nhat_eigenvalue = std::min(iter_checks.min_nhat_eigenvalue, nmin);

  report.step_error_estimate = cur.report.step_error_estimate;
  report.sup_l1_norm = cur.report.sup_l1_norm;
  report.residual = riccati_mild_residual(cur.field, lq, floor);
  report.estimate_m = estimate_report(cur.field);

  PropertyChecks checks = check_solution(cur.field, std::max<std::size_t>(opts.check_stride, 1),
                                         report.step_error_estimate);
  checks.worst_order_violation = iter_checks.worst_order_violation;
  checks.monotone_ok = iter_checks.monotone_ok;
  checks.u_iteration_monotone = iter_checks.u_iteration_monotone;
  checks.min_nhat_eigenvalue = iter_checks.min_nhat_eigenvalue;
  checks.nhat_floor_ok = checks.min_nhat_eigenvalue >= floor;
  checks.nhat_margin_ok =
      checks.min_nhat_eigenvalue >= lq.lambda_margin - 1e-10 * (1.0 + lq.lambda_margin);
  for (std::size_t k = 2; k < report.differences.size(); ++k) {
    if (report.differences[k] > report.differences[k - 1]) checks.cauchy_monotone = false;
  }
  report.checks = checks;
  return {std::move(cur.field), std::move(theta), std::move(report)};
}

RiccatiSolution solve_riccati_direct(std::shared_ptr<const MeasureAtoms> mu,
                                     const LQCoefficients& lq, double horizon,
                                     const RiccatiSolveOptions& opts) {
  if (!mu) throw ConfigError("riccati: null measure");
  lq.validate(*mu);
  if (opts.lyapunov.time_steps < 1) throw ConfigError("time_steps must be >= 1");
  if (!(horizon > 0.0)) throw ConfigError("horizon T must be positive");
  const double floor = default_floor(lq, opts.nhat_floor);
  const TimeGrid grid{horizon, opts.lyapunov.time_steps};
  const MeasureAtoms& m = *mu;

  KernelField field(mu, grid);
  double nmin = std::numeric_limits<double>::infinity();
  detail::RhsFn rhs = [&](std::size_t s, const KernelSlice& psi, KernelSlice& out) {
    nmin = std::min(nmin, riccati_rhs_impl(m, lq, psi, out, floor, grid.time(s)));
  };
  const auto stats =
      detail::backward_solve(field, rhs, opts.lyapunov.inner_tol, opts.lyapunov.inner_max_iter);

  RiccatiReport report;
  report.method = "direct";
  report.steps = grid.steps;
  report.residual = stats.residual;
  report.step_error_estimate = stats.step_error;
  for (std::size_t s = 0; s <= grid.steps; ++s) {
    report.sup_l1_norm = std::max(report.sup_l1_norm, l1_norm(field, s));
  }
  report.estimate_m = estimate_report(field);
  PropertyChecks checks = check_solution(field, std::max<std::size_t>(opts.check_stride, 1),
                                         stats.step_error);
  checks.min_nhat_eigenvalue = nmin;
  checks.nhat_floor_ok = nmin >= floor;
  checks.nhat_margin_ok = nmin >= lq.lambda_margin - 1e-10 * (1.0 + lq.lambda_margin);
  report.checks = checks;
  FeedbackField theta = theta_field_impl(lq, field, floor, nullptr);
  return {std::move(field), std::move(theta), std::move(report)};
}

DeltaResidual delta_residual(const LQCoefficients& lq, const KernelField& gamma_i,
                             const KernelField& gamma_next, const FeedbackField* theta_prev,
                             const LyapunovSolveOptions& opts, double floor) {
  if (gamma_i.steps() != gamma_next.steps() || gamma_i.n() != gamma_next.n() ||
      gamma_i.d() != gamma_next.d() ||
      gamma_i.grid().horizon != gamma_next.grid().horizon) {
    throw ConfigError("delta_residual: fields live on different grids");
  }
  if (theta_prev && theta_prev->values.size() != gamma_i.steps() + 1) {
    throw ConfigError("delta_residual: previous feedback lives on a different grid");
  }
  const double fl = default_floor(lq, floor);
  const MeasureAtoms& mu = gamma_i.measure();
  const std::size_t n = mu.size();
  const Eigen::Index d = mu.d();
  const Eigen::Index mm = lq.m();
  const TimeGrid grid = gamma_i.grid();

  DeltaResidual out;
  auto theta = std::make_shared<FeedbackField>(FeedbackField{grid, {}});
  std::vector<AtomMatrices> rho;
  std::vector<Eigen::MatrixXd> nh;
  for (std::size_t s = 0; s <= grid.steps; ++s) {
    RiccatiTerms r = riccati_terms(mu, lq, gamma_i.slice(s), fl, grid.time(s));
    // S + Nhat Theta vanishes by construction of Theta.
    for (std::size_t k = 0; k < n; ++k) {
      Eigen::MatrixXd sk(mm, d), tk(mm, d);
      for (Eigen::Index p = 0; p < mm; ++p) {
        for (Eigen::Index b = 0; b < d; ++b) {
          sk(p, b) = r.s.at(k, p, b);
          tk(p, b) = r.theta.at(k, p, b);
        }
      }
      out.coupling_defect = std::max(out.coupling_defect, (sk + r.nhat * tk).norm());
    }
    AtomMatrices rh(n, mm, d);
    for (Eigen::Index p = 0; p < mm; ++p) {
      for (Eigen::Index b = 0; b < d; ++b) {
        auto dst = rh.plane(p, b);
        if (theta_prev) {
          const auto src = theta_prev->values[s].plane(p, b);
          std::copy(src.begin(), src.end(), dst.begin());
        }
        simd::kernels().axpy(-1.0, r.theta.plane(p, b), dst);
      }
    }
    rho.push_back(std::move(rh));
    nh.push_back(r.nhat);
    theta->values.push_back(std::move(r.theta));
  }

  LyapunovCoefficients coeffs = feedback_coefficients(lq, mu, theta);
  auto rho_ptr = std::make_shared<const std::vector<AtomMatrices>>(std::move(rho));
  auto nh_ptr = std::make_shared<const std::vector<Eigen::MatrixXd>>(std::move(nh));
  coeffs.qtilde = [rho_ptr, nh_ptr, grid, n, d, mm](double t, KernelSlice& q) {
    const std::size_t s = grid.nearest_index(t);
    const AtomMatrices& r = (*rho_ptr)[s];
    const Eigen::MatrixXd& nhs = (*nh_ptr)[s];
    q = KernelSlice(n, d);
    std::vector<double> y(n);
    for (Eigen::Index qi = 0; qi < mm; ++qi) {
      for (Eigen::Index a = 0; a < d; ++a) {
        std::fill(y.begin(), y.end(), 0.0);
        for (Eigen::Index p = 0; p < mm; ++p) simd::kernels().axpy(nhs(p, qi), r.plane(p, a), y);
        for (Eigen::Index b = 0; b < d; ++b) q.add_outer(a, b, y, r.plane(qi, b));
      }
    }
  };

  LyapunovSolveOptions lo = opts;
  lo.method = LyapunovMethod::exponential_integrator;
  lo.time_steps = grid.steps;
  const LyapunovSolution sol =
      solve_lyapunov(gamma_i.measure_ptr(), coeffs, grid.horizon, lo);
  out.step_error_estimate = sol.report.step_error_estimate;
  for (std::size_t s = 0; s <= grid.steps; ++s) {
    KernelSlice diff = gamma_i.slice(s) - gamma_next.slice(s);
    out.delta_sup_l1 = std::max(out.delta_sup_l1, l1_norm(diff, mu));
    out.residual = std::max(out.residual, l1_distance(sol.field.slice(s), diff, mu));
  }
  return out;
}

}  // namespace kric
