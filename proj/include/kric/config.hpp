#pragma once

// Run configuration: one JSON document describing the problem, the solver
// settings, the Monte Carlo and sweep settings, and where to write results.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kric/lyapunov.hpp"
#include "kric/measure.hpp"
#include "kric/riccati.hpp"

namespace kric {

struct MeasureConfig {
  enum class Kind { atoms, fractional, user_density };
  Kind kind = Kind::atoms;
  Eigen::Index d = 1;
  Eigen::Index d_prime = 1;
  // atoms
  std::vector<double> nodes{0.0};
  std::vector<Eigen::MatrixXd> weights{Eigen::MatrixXd::Ones(1, 1)};
  // densities
  double hurst = 0.1;
  double theta_min = 1e-3;
  double theta_max = 1e3;
  std::size_t levels = 50;
  bool lump_lower_tail = true;
  std::vector<double> sample_theta;
  std::vector<Eigen::MatrixXd> sample_density;

  MeasureAtoms build() const;
};

struct ProblemConfig {
  MeasureConfig measure;
  LQCoefficients lq = LQCoefficients::scalar(0.5, 1.0, 0.0, 0.0, 1.0, 1.0, 0.5);
  double horizon = 1.0;
  // Constant Lyapunov coefficients; Q, B and D are used when absent.
  std::optional<Eigen::MatrixXd> qtilde;
  std::optional<Eigen::MatrixXd> btilde;
  std::optional<Eigen::MatrixXd> dtilde;

  LyapunovCoefficients lyapunov_coefficients(std::size_t n) const;
};

struct SolverConfig {
  std::string riccati_method = "iterative";  // or "direct"
  std::size_t time_steps = 1000;
  double outer_tol = -1.0;
  std::size_t max_outer_iter = 200;
  std::string lyapunov_method = "exponential_integrator";
  double picard_lambda = -1.0;
  double picard_tol = 1e-12;
  std::size_t picard_max_iter = 500;
  double inner_tol = 1e-12;
  std::size_t inner_max_iter = 50;
  double nhat_floor = -1.0;
  std::size_t check_stride = 1;
  double oracle_dt = 1e-4;

  RiccatiSolveOptions riccati_options() const;
  LyapunovSolveOptions lyapunov_options() const;
};

struct McConfig {
  std::size_t paths = 100000;
  std::size_t steps = 1000;
  bool antithetic = false;
  double t = 0.0;
  std::optional<Eigen::MatrixXd> phi;  // n x d'; ones when absent
};

struct KernelConfig {
  double t_min = 0.01;
  double t_max = 1.0;
  std::size_t points = 50;
};

struct SweepConfig {
  std::string axis = "n";  // n, H, T or time_steps
  std::vector<double> values{20, 40, 80};
};

struct OutputConfig {
  std::string dir = "out";
  bool write_field = true;
  /// Slices between written field rows; 0 picks about 100 slices.
  std::size_t field_stride = 0;
};

struct RunConfig {
  std::string mode = "validate";
  std::uint64_t seed = 42;
  ProblemConfig problem;
  SolverConfig solver;
  McConfig mc;
  KernelConfig kernel;
  SweepConfig sweep;
  OutputConfig output;
};

/// The recognized modes, in CLI order.
const std::vector<std::string>& run_modes();

/// Parses a JSON document. Missing keys take defaults; unknown keys and
/// malformed values throw ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// Canonical JSON with every field present. parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& c);

}  // namespace kric
