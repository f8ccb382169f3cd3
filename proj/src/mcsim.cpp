#include "kric/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "kric/errors.hpp"
#include "kric/expint.hpp"

namespace kric {

double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

namespace {

struct NodeData {
  std::vector<Eigen::MatrixXd> bw;  // Bt(tau) w_tau, d' x d'
  std::vector<Eigen::MatrixXd> dw;  // Dt(tau) w_tau, d' x d'
  bool has_b = false;
  bool has_d = false;
};

struct StepCost {
  KernelSlice q;   // Qt at the step midpoint
  KernelSlice qh;  // q o h phi1((theta_j + theta_k) h)
};

struct PathOutcome {
  double value = 0.0;
  double fourth = 0.0;
  bool ok = true;
};

// sum_{a,b,j,k} u(j,a) q(j,k)_{ab} v(k,b)
double bilinear(const KernelSlice& q, const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
  const std::size_t n = q.n();
  double c = 0.0;
  for (Eigen::Index a = 0; a < q.d(); ++a) {
    for (Eigen::Index b = 0; b < q.d(); ++b) {
      for (std::size_t j = 0; j < n; ++j) {
        const double uj = u(static_cast<Eigen::Index>(j), a);
        if (uj == 0.0) continue;
        const auto row = q.row(a, b, j);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += row[k] * v(static_cast<Eigen::Index>(k), b);
        c += uj * acc;
      }
    }
  }
  return c;
}

// Exponential Euler-Maruyama in the noise with an exponential Heun correction
// of the drift. Over one step each state is split into its decayed start value
// and a forced remainder r; the cost integral is exact for the first part,
// and r is taken linear in time for the cross and remainder terms.
class Simulator {
 public:
  Simulator(const MeasureAtoms& mu, const LyapunovCoefficients& coeffs, const TestFunction& phi,
            double t, double horizon, const McOptions& opts)
      : mu_(mu), phi_(phi), opts_(opts) {
    const std::size_t n = mu.size();
    h_ = (horizon - t) / static_cast<double>(opts.steps);
    decay_.resize(n);
    drift_weight_.resize(n);
    correction_weight_.resize(n);
    cross_weight_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double z = mu.node(k) * h_;
      decay_[k] = std::exp(-z);
      drift_weight_[k] = decay_integral(mu.node(k), h_);
      cross_weight_[k] = h_ * ramp(z);
      correction_weight_[k] = drift_weight_[k] - cross_weight_[k];
    }
    std::vector<double> pair(n * n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) pair[j * n + k] = decay_integral(mu.node(j) + mu.node(k), h_);
    }
    nodes_.reserve(opts.steps + 1);
    for (std::size_t s = 0; s <= opts.steps; ++s) {
      const double ts = s == opts.steps ? horizon : t + h_ * static_cast<double>(s);
      const CoefficientSnapshot snap = evaluate_coefficients(coeffs, mu, ts);
      NodeData nd;
      nd.has_b = snap.has_b1;
      nd.has_d = snap.has_d1;
      for (std::size_t k = 0; k < n; ++k) {
        if (nd.has_b) nd.bw.push_back(snap.b1.matrix(k) * mu.weight(k));
        if (nd.has_d) nd.dw.push_back(snap.d1.matrix(k) * mu.weight(k));
      }
      nodes_.push_back(std::move(nd));
    }
    costs_.reserve(opts.steps);
    for (std::size_t s = 0; s < opts.steps; ++s) {
      CoefficientSnapshot snap = evaluate_coefficients(coeffs, mu, t + h_ * (static_cast<double>(s) + 0.5));
      if (!psd_warning_ && n > 0) {
        const auto r = check_symmetric_nonnegative(snap.qtilde, mu,
                                                   default_psd_tolerance(snap.qtilde, mu));
        psd_warning_ = !r.passed;
      }
      StepCost sc;
      sc.q = std::move(snap.qtilde);
      sc.qh = sc.q;
      for (Eigen::Index a = 0; a < mu.d(); ++a) {
        for (Eigen::Index b = 0; b < mu.d(); ++b) {
          auto p = sc.qh.plane(a, b);
          for (std::size_t i = 0; i < p.size(); ++i) p[i] *= pair[i];
        }
      }
      costs_.push_back(std::move(sc));
    }
  }

  bool psd_warning() const { return psd_warning_; }

  // Path `base` with its noise optionally mirrored.
  PathOutcome run(std::uint64_t base, bool mirror) const {
    const std::size_t n = mu_.size();
    const Eigen::Index d = mu_.d();
    const Eigen::Index dp = mu_.d_prime();
    std::seed_seq seq{static_cast<std::uint32_t>(opts_.seed), static_cast<std::uint32_t>(opts_.seed >> 32),
                      static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sqrt_h = std::sqrt(h_);

    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd y = phi_.values;  // n x d'
    Eigen::MatrixXd next(ni, dp), rest(ni, dp);
    Eigen::MatrixXd zy(ni, d), zr(ni, d), zc(ni, d);
    Eigen::VectorXd drift(dp), drift_next(dp), vol(dp);
    PathOutcome out;
    double cost = 0.0;
    auto track = [&]() {
      const double sq = y.squaredNorm();
      out.fourth = std::max(out.fourth, sq * sq);
      return std::isfinite(sq) && sq < 1e24;
    };
    auto combine = [&](const std::vector<Eigen::MatrixXd>& coef, const Eigen::MatrixXd& x,
                       Eigen::VectorXd& acc) {
      acc.setZero();
      for (std::size_t k = 0; k < n; ++k) {
        acc.noalias() += coef[k] * x.row(static_cast<Eigen::Index>(k)).transpose();
      }
    };
    track();
    for (std::size_t s = 0; s < costs_.size(); ++s) {
      const NodeData& left = nodes_[s];
      const NodeData& right = nodes_[s + 1];
      if (left.has_b) combine(left.bw, y, drift);
      else drift.setZero();
      double dw = 0.0;
      if (left.has_d) {
        combine(left.dw, y, vol);
        dw = (mirror ? -1.0 : 1.0) * sqrt_h * normal(rng);
      }
      for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        for (Eigen::Index c = 0; c < dp; ++c) {
          const double noisy = left.has_d ? y(i, c) + dw * vol(c) : y(i, c);
          next(i, c) = decay_[k] * noisy + drift_weight_[k] * drift(c);
        }
      }
      if (right.has_b) {
        combine(right.bw, next, drift_next);
        drift_next -= drift;
        for (std::size_t k = 0; k < n; ++k) {
          next.row(static_cast<Eigen::Index>(k)) += correction_weight_[k] * drift_next.transpose();
        }
      } else if (left.has_b) {
        for (std::size_t k = 0; k < n; ++k) {
          next.row(static_cast<Eigen::Index>(k)) -= correction_weight_[k] * drift.transpose();
        }
      }

      for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        rest.row(i) = next.row(i) - decay_[k] * y.row(i);
        zy.row(i).noalias() = y.row(i) * mu_.weight(k).transpose();
        zr.row(i).noalias() = rest.row(i) * mu_.weight(k).transpose();
        zc.row(i) = cross_weight_[k] * zy.row(i);
      }
      const StepCost& sc = costs_[s];
      cost += bilinear(sc.qh, zy, zy) + 2.0 * bilinear(sc.q, zc, zr) + (h_ / 3.0) * bilinear(sc.q, zr, zr);

      y.swap(next);
      if (!track()) {
        out.ok = false;
        return out;
      }
    }
    out.value = cost;
    return out;
  }

 private:
  const MeasureAtoms& mu_;
  const TestFunction& phi_;
  McOptions opts_;
  double h_ = 0.0;
  std::vector<double> decay_;
  std::vector<double> drift_weight_;
  std::vector<double> correction_weight_;
  std::vector<double> cross_weight_;
  std::vector<NodeData> nodes_;
  std::vector<StepCost> costs_;
  bool psd_warning_ = false;
};

}  // namespace

McResult simulate_quadratic_form(const MeasureAtoms& mu, const LyapunovCoefficients& coeffs,
                                 const TestFunction& phi, double t, double horizon,
                                 const McOptions& opts) {
  if (opts.paths < 2 || opts.steps < 1) throw ConfigError("mc: need >= 2 paths and >= 1 step");
  if (opts.antithetic && opts.paths % 2 != 0) {
    throw ConfigError("mc: antithetic sampling needs an even path count");
  }
  if (!(t >= 0.0 && t < horizon)) throw ConfigError("mc: need 0 <= t < T");
  if (phi.size() != mu.size() || phi.dim() != mu.d_prime()) {
    throw ConfigError("mc: test function does not match the measure");
  }
  if (!coeffs.symmetric) {
    throw ConfigError("mc: the lifted representation requires a symmetric configuration");
  }
  const Simulator sim(mu, coeffs, phi, t, horizon, opts);

  // One sample per independent unit: a path, or an antithetic pair.
  const std::size_t units = opts.antithetic ? opts.paths / 2 : opts.paths;
  std::vector<double> value(units, 0.0);
  std::vector<double> fourth(units, 0.0);
  std::vector<unsigned char> ok(units, 1);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      if (opts.antithetic) {
        const PathOutcome a = sim.run(u, false);
        const PathOutcome b = sim.run(u, true);
        ok[u] = a.ok && b.ok;
        value[u] = 0.5 * (a.value + b.value);
        fourth[u] = 0.5 * (a.fourth + b.fourth);
      } else {
        const PathOutcome a = sim.run(u, false);
        ok[u] = a.ok;
        value[u] = a.value;
        fourth[u] = a.fourth;
      }
    }
  };
  std::size_t workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, units);
  if (workers <= 1) {
    work(0, units);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (units + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(units, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<double> kept, kept4;
  kept.reserve(units);
  McResult r;
  for (std::size_t u = 0; u < units; ++u) {
    if (ok[u]) {
      kept.push_back(value[u]);
      kept4.push_back(fourth[u]);
    } else {
      r.excluded += opts.antithetic ? 2 : 1;
    }
  }
  r.qtilde_psd_warning = sim.psd_warning();
  r.paths_used = opts.antithetic ? 2 * kept.size() : kept.size();
  if (kept.empty()) return r;
  const double count = static_cast<double>(kept.size());
  r.estimate = pairwise_sum(kept.data(), kept.size()) / count;
  r.fourth_moment = pairwise_sum(kept4.data(), kept4.size()) / count;
  std::vector<double> sq(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) sq[i] = (kept[i] - r.estimate) * (kept[i] - r.estimate);
  if (kept.size() > 1) {
    const double var = pairwise_sum(sq.data(), sq.size()) / (count - 1.0);
    r.std_error = std::sqrt(var / count);
  }
  return r;
}

PositivityProbe positivity_probe(const MeasureAtoms& mu, const LyapunovCoefficients& coeffs,
                                 double t, double horizon, std::size_t trials,
                                 const McOptions& opts) {
  PositivityProbe probe;
  probe.trials = trials;
  probe.min_estimate = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < trials; ++i) {
    TestFunction phi;
    phi.values.resize(static_cast<Eigen::Index>(mu.size()), mu.d_prime());
    for (Eigen::Index r = 0; r < phi.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < phi.values.cols(); ++c) phi.values(r, c) = normal(rng);
    }
    McOptions o = opts;
    o.seed = opts.seed + 1 + i;
    const McResult res = simulate_quadratic_form(mu, coeffs, phi, t, horizon, o);
    probe.min_estimate = std::min(probe.min_estimate, res.estimate);
    probe.max_std_error = std::max(probe.max_std_error, res.std_error);
  }
  if (trials == 0) probe.min_estimate = 0.0;
  probe.passed = probe.min_estimate >= -3.0 * probe.max_std_error;
  return probe;
}

}  // namespace kric
