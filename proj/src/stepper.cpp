#include "stepper.hpp"

#include <cmath>
#include <string>

#include "kric/errors.hpp"
#include "kric/expint.hpp"
#include "kric/simd/kernels.hpp"

namespace kric::detail {

StepWeights make_step_weights(const MeasureAtoms& m, double h) {
  const std::size_t n = m.size();
  StepWeights w;
  w.decay.resize(n * n);
  w.weight.resize(n * n);
  w.gap.resize(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double z = (m.node(j) + m.node(k)) * h;
      const double p = phi1(z);
      w.decay[j * n + k] = std::exp(-z);
      w.weight[j * n + k] = h * p;
      w.gap[j * n + k] = h * (0.5 * p - ramp(z));
    }
  }
  return w;
}

namespace {

// out = E prev + H (f0 + f1) / 2 on every block plane.
void step_into(const StepWeights& w, const KernelSlice& prev, const KernelSlice& f0,
               const KernelSlice& f1, KernelSlice& out) {
  const auto& kt = simd::kernels();
  const Eigen::Index d = prev.d();
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      kt.exp_step(w.decay, w.weight, prev.plane(a, b), f0.plane(a, b), f1.plane(a, b),
                  out.plane(a, b));
    }
  }
}

// L1 norm of the slice scaled entrywise by a pair weight.
double scaled_l1(const std::vector<double>& scale, const KernelSlice& g, const MeasureAtoms& m) {
  KernelSlice tmp = g;
  const Eigen::Index d = g.d();
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      auto p = tmp.plane(a, b);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] *= scale[i];
    }
  }
  return l1_norm(tmp, m);
}

void require_finite(const KernelSlice& g, double t) {
  if (!g.all_finite()) {
    throw NumericalError("non-finite kernel values while stepping at t=" + std::to_string(t));
  }
}

}  // namespace

StepperStats backward_solve(KernelField& field, const RhsFn& rhs, double inner_tol,
                            std::size_t inner_max) {
  const MeasureAtoms& m = field.measure();
  const TimeGrid& grid = field.grid();
  const std::size_t steps = grid.steps;
  const StepWeights w = make_step_weights(m, grid.dt());
  const auto& kt = simd::kernels();
  StepperStats stats;

  const std::size_t n = m.size();
  const Eigen::Index d = m.d();
  field.slice(steps).set_zero();
  KernelSlice f_next(n, d);   // F at s + 1
  KernelSlice f_next2(n, d);  // F at s + 2
  KernelSlice f_cur(n, d);
  KernelSlice trial(n, d);
  rhs(steps, field.slice(steps), f_next);
  require_finite(f_next, grid.time(steps));
  bool have_next2 = false;

  for (std::size_t s = steps; s-- > 0;) {
    const KernelSlice& prev = field.slice(s + 1);
    KernelSlice& cur = field.slice(s);
    step_into(w, prev, f_next, f_next, cur);
    std::size_t iters = 0;
    bool converged = false;
    while (iters < inner_max) {
      rhs(s, cur, f_cur);
      ++iters;
      step_into(w, prev, f_next, f_cur, trial);
      require_finite(trial, grid.time(s));
      const double diff = kt.max_abs_diff(trial.data(), cur.data());
      const double scale = trial.max_abs();
      std::swap(cur, trial);
      if (diff <= inner_tol * scale) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw ConvergenceError("implicit step did not converge within " + std::to_string(inner_max) +
                             " passes at t=" + std::to_string(grid.time(s)) +
                             "; increase time_steps");
    }
    rhs(s, cur, f_cur);
    step_into(w, prev, f_next, f_cur, trial);
    stats.residual = std::max(stats.residual, l1_distance(cur, trial, m));
    stats.total_inner += iters;
    stats.max_inner = std::max(stats.max_inner, iters);

    KernelSlice diff1 = f_cur - f_next;
    double local = scaled_l1(w.gap, diff1, m);
    if (have_next2) {
      KernelSlice second = diff1;
      second -= f_next;
      second += f_next2;
      local += scaled_l1(w.weight, second, m) / 12.0;
    }
    stats.step_error += local;

    std::swap(f_next2, f_next);
    std::swap(f_next, f_cur);
    have_next2 = true;
  }
  return stats;
}

void picard_sweep(const KernelField& in, KernelField& out, const RhsFn& rhs) {
  const MeasureAtoms& m = in.measure();
  const TimeGrid& grid = in.grid();
  const StepWeights w = make_step_weights(m, grid.dt());
  KernelSlice f_next(m.size(), m.d());
  KernelSlice f_cur(m.size(), m.d());
  out.slice(grid.steps).set_zero();
  rhs(grid.steps, in.slice(grid.steps), f_next);
  for (std::size_t s = grid.steps; s-- > 0;) {
    rhs(s, in.slice(s), f_cur);
    step_into(w, out.slice(s + 1), f_next, f_cur, out.slice(s));
    require_finite(out.slice(s), grid.time(s));
    std::swap(f_next, f_cur);
  }
}

double mild_residual(const KernelField& field, const RhsFn& rhs) {
  const MeasureAtoms& m = field.measure();
  const TimeGrid& grid = field.grid();
  const StepWeights w = make_step_weights(m, grid.dt());
  KernelSlice f_next(m.size(), m.d());
  KernelSlice f_cur(m.size(), m.d());
  KernelSlice trial(m.size(), m.d());
  double worst = l1_norm(field.slice(grid.steps), m);
  rhs(grid.steps, field.slice(grid.steps), f_next);
  for (std::size_t s = grid.steps; s-- > 0;) {
    rhs(s, field.slice(s), f_cur);
    step_into(w, field.slice(s + 1), f_next, f_cur, trial);
    worst = std::max(worst, l1_distance(field.slice(s), trial, m));
    std::swap(f_next, f_cur);
  }
  return worst;
}

}  // namespace kric::detail
