#include "kric/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kric/errors.hpp"
#include "kric/expint.hpp"

namespace kric {

MeasureAtoms::MeasureAtoms(Eigen::Index d, Eigen::Index d_prime)
    : MeasureAtoms({}, {}, d, d_prime, false) {}

MeasureAtoms::MeasureAtoms(std::vector<double> nodes, std::vector<Eigen::MatrixXd> weights,
                           Eigen::Index d, Eigen::Index d_prime, bool from_density)
    : nodes_(std::move(nodes)),
      weights_(std::move(weights)),
      d_(d),
      d_prime_(d_prime),
      from_density_(from_density) {
  if (d < 1 || d_prime < 1) throw ConfigError("measure dimensions must be positive");
  if (nodes_.size() != weights_.size()) {
    throw ConfigError("measure: node count and weight count differ");
  }
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (!std::isfinite(nodes_[k]) || nodes_[k] < 0.0) {
      throw ConfigError("measure: node " + std::to_string(k) + " is negative or not finite");
    }
    if (k > 0 && !(nodes_[k] > nodes_[k - 1])) {
      throw ConfigError("measure: nodes must be strictly increasing (node " + std::to_string(k) +
                        ")");
    }
    if (weights_[k].rows() != d || weights_[k].cols() != d_prime) {
      std::ostringstream os;
      os << "measure: weight " << k << " is " << weights_[k].rows() << "x" << weights_[k].cols()
         << ", expected " << d << "x" << d_prime;
      throw ConfigError(os.str());
    }
    if (!weights_[k].allFinite()) {
      throw ConfigError("measure: weight " + std::to_string(k) + " is not finite");
    }
  }
  const std::size_t n = nodes_.size();
  abs_weights_.resize(n);
  for (std::size_t k = 0; k < n; ++k) abs_weights_[k] = weights_[k].norm();
  planar_.resize(static_cast<std::size_t>(d * d_prime) * n);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index c = 0; c < d_prime; ++c) {
      double* plane = planar_.data() + static_cast<std::size_t>(a * d_prime + c) * n;
      for (std::size_t k = 0; k < n; ++k) plane[k] = weights_[k](a, c);
    }
  }
}

MeasureAtoms MeasureAtoms::scalar(std::vector<double> nodes, std::vector<double> weights,
                                  bool from_density) {
  std::vector<Eigen::MatrixXd> w;
  w.reserve(weights.size());
  for (double x : weights) w.push_back(Eigen::MatrixXd::Constant(1, 1, x));
  return MeasureAtoms(std::move(nodes), std::move(w), 1, 1, from_density);
}

std::span<const double> MeasureAtoms::weight_entries(Eigen::Index a, Eigen::Index c) const {
  const std::size_t n = nodes_.size();
  return {planar_.data() + static_cast<std::size_t>(a * d_prime_ + c) * n, n};
}

double MeasureAtoms::total_variation() const {
  double s = 0.0;
  for (double w : abs_weights_) s += w;
  return s;
}

double fractional_constant(double hurst) { return 1.0 / std::tgamma(0.5 - hurst); }

double check_measure_condition(const MeasureAtoms& m) {
  double s = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double theta = m.node(k);
    const double factor = theta <= 1.0 ? 1.0 : 1.0 / std::sqrt(theta);
    s += factor * m.abs_weights()[k];
  }
  return s;
}

namespace {

void validate_window(const DensityMeasureSpec& spec) {
  if (!(spec.theta_min > 0.0) || !std::isfinite(spec.theta_min) || !std::isfinite(spec.theta_max) ||
      !(spec.theta_min < spec.theta_max)) {
    throw ConfigError("density: truncation requires 0 < theta_min < theta_max < inf");
  }
  if (spec.levels < 1) throw ConfigError("density: level count must be >= 1");
}

std::vector<double> geometric_breaks(double lo, double hi, std::size_t n) {
  std::vector<double> xi(n + 1);
  const double ratio = std::log(hi / lo) / static_cast<double>(n);
  for (std::size_t i = 0; i <= n; ++i) xi[i] = lo * std::exp(ratio * static_cast<double>(i));
  xi[n] = hi;
  return xi;
}

MeasureAtoms discretize_fractional(const FractionalDensity& f, const DensityMeasureSpec& spec) {
  const double h = f.hurst;
  if (!(h > 0.0 && h < 0.5)) {
    throw ConfigError("density: fractional kernel requires 0 < H < 1/2, got H=" + std::to_string(h));
  }
  const double c_h = fractional_constant(h);
  const double a = 0.5 - h;
  std::vector<double> xi = geometric_breaks(spec.theta_min, spec.theta_max, spec.levels);
  if (spec.lump_lower_tail) xi[0] = 0.0;
  std::vector<double> nodes(spec.levels);
  std::vector<double> weights(spec.levels);
  for (std::size_t k = 0; k < spec.levels; ++k) {
    const double lo = xi[k];
    const double hi = xi[k + 1];
    const double mass = c_h * (std::pow(hi, a) - std::pow(lo, a)) / a;
    const double moment = c_h * (std::pow(hi, a + 1.0) - std::pow(lo, a + 1.0)) / (a + 1.0);
    weights[k] = mass;
    nodes[k] = moment / mass;
  }
  return MeasureAtoms::scalar(std::move(nodes), std::move(weights), true);
}

struct CellIntegral {
  Eigen::MatrixXd mass;
  double abs_mass = 0.0;
  double abs_moment = 0.0;
};

Eigen::MatrixXd interpolate(const UserDensity& u, double x) {
  const auto& t = u.theta;
  if (x < t.front() || x > t.back()) {
    return Eigen::MatrixXd::Zero(u.density.front().rows(), u.density.front().cols());
  }
  auto it = std::upper_bound(t.begin(), t.end(), x);
  if (it == t.end()) return u.density.back();
  const std::size_t i = static_cast<std::size_t>(it - t.begin());
  if (i == 0) return u.density.front();
  const double s = (x - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - s) * u.density[i - 1] + s * u.density[i];
}

// Exact integrals of the piecewise-linear interpolant over [lo, hi].
CellIntegral integrate_cell(const UserDensity& u, double lo, double hi) {
  std::vector<double> pts{lo};
  for (double x : u.theta) {
    if (x > lo && x < hi) pts.push_back(x);
  }
  pts.push_back(hi);
  CellIntegral out;
  out.mass = Eigen::MatrixXd::Zero(u.density.front().rows(), u.density.front().cols());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double x0 = pts[i];
    const double x1 = pts[i + 1];
    const Eigen::MatrixXd r0 = interpolate(u, x0);
    const Eigen::MatrixXd r1 = interpolate(u, x1);
    const double len = x1 - x0;
    out.mass += 0.5 * len * (r0 + r1);
    const double s0 = r0.norm();
    const double s1 = r1.norm();
    out.abs_mass += 0.5 * len * (s0 + s1);
    out.abs_moment += len * (x0 * (2.0 * s0 + s1) + x1 * (s0 + 2.0 * s1)) / 6.0;
  }
  return out;
}

MeasureAtoms discretize_user(const UserDensity& u, const DensityMeasureSpec& spec) {
  if (u.theta.size() < 2 || u.theta.size() != u.density.size()) {
    throw ConfigError("density: user density needs >= 2 samples with one matrix each");
  }
  for (std::size_t i = 0; i < u.theta.size(); ++i) {
    if (!std::isfinite(u.theta[i]) || u.theta[i] < 0.0 || (i > 0 && !(u.theta[i] > u.theta[i - 1]))) {
      throw ConfigError("density: sample abscissae must be finite, >= 0 and increasing");
    }
    if (u.density[i].rows() != u.density[0].rows() || u.density[i].cols() != u.density[0].cols() ||
        !u.density[i].allFinite()) {
      throw ConfigError("density: sample matrices must be finite and share one shape");
    }
  }
  const auto xi = geometric_breaks(spec.theta_min, spec.theta_max, spec.levels);
  std::vector<double> nodes;
  std::vector<Eigen::MatrixXd> weights;
  for (std::size_t k = 0; k < spec.levels; ++k) {
    const CellIntegral cell = integrate_cell(u, xi[k], xi[k + 1]);
    const double node = cell.abs_mass > 0.0 ? cell.abs_moment / cell.abs_mass
                                            : 0.5 * (xi[k] + xi[k + 1]);
    nodes.push_back(std::clamp(node, xi[k], xi[k + 1]));
    weights.push_back(cell.mass);
  }
  // Barycenters lie inside disjoint cells; collapse exact ties at shared edges.
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    if (!(nodes[k] > nodes[k - 1])) nodes[k] = std::nextafter(nodes[k - 1], spec.theta_max);
  }
  return MeasureAtoms(std::move(nodes), std::move(weights), u.density[0].rows(),
                      u.density[0].cols(), true);
}

}  // namespace

MeasureAtoms discretize_density(const DensityMeasureSpec& spec) {
  validate_window(spec);
  if (const auto* f = std::get_if<FractionalDensity>(&spec.kind)) {
    return discretize_fractional(*f, spec);
  }
  return discretize_user(std::get<UserDensity>(spec.kind), spec);
}

Eigen::MatrixXd kernel_eval(const MeasureAtoms& m, double t) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m.d(), m.d_prime());
  for (std::size_t i = 0; i < m.size(); ++i) k += std::exp(-m.node(i) * t) * m.weight(i);
  return k;
}

double bar_kernel_eval(const MeasureAtoms& m, double t) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += std::exp(-m.node(i) * t) * m.abs_weights()[i];
  return s;
}

double bar_kernel_l1(const MeasureAtoms& m, double horizon) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    s += m.abs_weights()[i] * decay_integral(m.node(i), horizon);
  }
  return s;
}

double bar_kernel_l2_squared(const MeasureAtoms& m, double horizon) {
  double s = 0.0;
  const auto& w = m.abs_weights();
  for (std::size_t j = 0; j < m.size(); ++j) {
    for (std::size_t k = 0; k < m.size(); ++k) {
      s += w[j] * w[k] * decay_integral(m.node(j) + m.node(k), horizon);
    }
  }
  return s;
}

ConditionStudy condition_refinement_study(DensityMeasureSpec spec, std::size_t refinements,
                                          double tolerance) {
  ConditionStudy study;
  for (std::size_t r = 0; r <= refinements; ++r) {
    study.levels.push_back(spec.levels);
    study.values.push_back(check_measure_condition(discretize_density(spec)));
    if (r > 0) {
      const double prev = study.values[r - 1];
      const double cur = study.values[r];
      study.relative_changes.push_back(std::abs(cur - prev) / std::max(std::abs(cur), 1e-300));
    }
    spec.levels *= 2;
  }
  study.cauchy = !study.relative_changes.empty() && study.relative_changes.back() <= tolerance;
  return study;
}

}  // namespace kric
