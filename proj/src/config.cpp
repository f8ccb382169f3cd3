#include "kric/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "kric/errors.hpp"

namespace kric {

using Json = nlohmann::ordered_json;

MeasureAtoms MeasureConfig::build() const {
  switch (kind) {
    case Kind::atoms:
      return MeasureAtoms(nodes, weights, d, d_prime, false);
    case Kind::fractional: {
      DensityMeasureSpec spec;
      spec.kind = FractionalDensity{hurst};
      spec.theta_min = theta_min;
      spec.theta_max = theta_max;
      spec.levels = levels;
      spec.lump_lower_tail = lump_lower_tail;
      return discretize_density(spec);
    }
    case Kind::user_density: {
      DensityMeasureSpec spec;
      spec.kind = UserDensity{sample_theta, sample_density};
      spec.theta_min = theta_min;
      spec.theta_max = theta_max;
      spec.levels = levels;
      return discretize_density(spec);
    }
  }
  throw ConfigError("unknown measure kind");
}

LyapunovCoefficients ProblemConfig::lyapunov_coefficients(std::size_t n) const {
  return LyapunovCoefficients::constant(n, qtilde.value_or(lq.Q), btilde.value_or(lq.B),
                                        dtilde.value_or(lq.D));
}

RiccatiSolveOptions SolverConfig::riccati_options() const {
  RiccatiSolveOptions o;
  o.max_outer_iter = max_outer_iter;
  o.outer_tol = outer_tol;
  o.nhat_floor = nhat_floor;
  o.check_stride = check_stride;
  o.lyapunov = lyapunov_options();
  // The outer loop always uses the stepping solver; Picard is a verification mode.
  o.lyapunov.method = LyapunovMethod::exponential_integrator;
  return o;
}

LyapunovSolveOptions SolverConfig::lyapunov_options() const {
  LyapunovSolveOptions o;
  o.method = lyapunov_method_from_string(lyapunov_method);
  o.time_steps = time_steps;
  o.picard_lambda = picard_lambda;
  o.picard_tol = picard_tol;
  o.picard_max_iter = picard_max_iter;
  o.inner_tol = inner_tol;
  o.inner_max_iter = inner_max_iter;
  return o;
}

const std::vector<std::string>& run_modes() {
  static const std::vector<std::string> modes{"solve-riccati", "solve-lyapunov", "validate",
                                              "kernel",        "mc-check",       "sweep"};
  return modes;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config " + where + ": " + what);
}

void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) fail(where, "unknown key '" + it.key() + "'");
  }
}

double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

std::size_t get_count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(where, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

std::size_t get_positive(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 1) fail(where, "expected a positive integer");
  return j.get<std::size_t>();
}

bool get_bool(const Json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const Json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

Eigen::MatrixXd get_matrix(const Json& j, const std::string& where) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) fail(where, "expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) fail(where, "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          get_number(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

template <class T, class Fn>
void read(const Json& obj, const char* key, T& dst, Fn fn, const std::string& where) {
  if (obj.contains(key)) dst = fn(obj.at(key), where + "." + key);
}

MeasureConfig parse_measure(const Json& j, const std::string& where) {
  MeasureConfig m;
  const std::string type = j.contains("type") ? get_string(j.at("type"), where + ".type") : "atoms";
  if (type == "atoms") {
    check_keys(j, {"type", "d", "d_prime", "atoms"}, where);
    m.kind = MeasureConfig::Kind::atoms;
    read(j, "d", m.d, [](const Json& x, const std::string& w) { return static_cast<Eigen::Index>(get_positive(x, w)); }, where);
    read(j, "d_prime", m.d_prime, [](const Json& x, const std::string& w) { return static_cast<Eigen::Index>(get_positive(x, w)); }, where);
    if (j.contains("atoms")) {
      const Json& atoms = j.at("atoms");
      if (!atoms.is_array()) fail(where + ".atoms", "expected an array");
      m.nodes.clear();
      m.weights.clear();
      for (std::size_t k = 0; k < atoms.size(); ++k) {
        const std::string w = where + ".atoms[" + std::to_string(k) + "]";
        check_keys(atoms[k], {"theta", "weight"}, w);
        if (!atoms[k].contains("theta") || !atoms[k].contains("weight")) {
          fail(w, "atoms need 'theta' and 'weight'");
        }
        m.nodes.push_back(get_number(atoms[k].at("theta"), w + ".theta"));
        m.weights.push_back(get_matrix(atoms[k].at("weight"), w + ".weight"));
      }
    }
  } else if (type == "fractional") {
    check_keys(j, {"type", "hurst", "theta_min", "theta_max", "levels", "lump_lower_tail"}, where);
    m.kind = MeasureConfig::Kind::fractional;
    m.nodes.clear();
    m.weights.clear();
    read(j, "hurst", m.hurst, get_number, where);
    read(j, "theta_min", m.theta_min, get_number, where);
    read(j, "theta_max", m.theta_max, get_number, where);
    read(j, "levels", m.levels, get_count, where);
    read(j, "lump_lower_tail", m.lump_lower_tail, get_bool, where);
  } else if (type == "user_density") {
    check_keys(j, {"type", "theta_min", "theta_max", "levels", "samples"}, where);
    m.kind = MeasureConfig::Kind::user_density;
    m.nodes.clear();
    m.weights.clear();
    read(j, "theta_min", m.theta_min, get_number, where);
    read(j, "theta_max", m.theta_max, get_number, where);
    read(j, "levels", m.levels, get_count, where);
    if (!j.contains("samples") || !j.at("samples").is_array()) {
      fail(where + ".samples", "user_density needs an array of samples");
    }
    const Json& samples = j.at("samples");
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const std::string w = where + ".samples[" + std::to_string(k) + "]";
      check_keys(samples[k], {"theta", "density"}, w);
      if (!samples[k].contains("theta") || !samples[k].contains("density")) {
        fail(w, "samples need 'theta' and 'density'");
      }
      m.sample_theta.push_back(get_number(samples[k].at("theta"), w + ".theta"));
      m.sample_density.push_back(get_matrix(samples[k].at("density"), w + ".density"));
    }
    if (!m.sample_density.empty()) {
      m.d = m.sample_density.front().rows();
      m.d_prime = m.sample_density.front().cols();
    }
  } else {
    fail(where + ".type", "unknown measure type '" + type + "'");
  }
  return m;
}

Json measure_json(const MeasureConfig& m) {
  Json j;
  switch (m.kind) {
    case MeasureConfig::Kind::atoms: {
      j["type"] = "atoms";
      j["d"] = m.d;
      j["d_prime"] = m.d_prime;
      Json atoms = Json::array();
      for (std::size_t k = 0; k < m.nodes.size(); ++k) {
        atoms.push_back(Json{{"theta", m.nodes[k]}, {"weight", matrix_json(m.weights[k])}});
      }
      j["atoms"] = atoms;
      break;
    }
    case MeasureConfig::Kind::fractional:
      j["type"] = "fractional";
      j["hurst"] = m.hurst;
      j["theta_min"] = m.theta_min;
      j["theta_max"] = m.theta_max;
      j["levels"] = m.levels;
      j["lump_lower_tail"] = m.lump_lower_tail;
      break;
    case MeasureConfig::Kind::user_density: {
      j["type"] = "user_density";
      j["theta_min"] = m.theta_min;
      j["theta_max"] = m.theta_max;
      j["levels"] = m.levels;
      Json samples = Json::array();
      for (std::size_t k = 0; k < m.sample_theta.size(); ++k) {
        samples.push_back(
            Json{{"theta", m.sample_theta[k]}, {"density", matrix_json(m.sample_density[k])}});
      }
      j["samples"] = samples;
      break;
    }
  }
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  check_keys(root, {"mode", "seed", "problem", "solver", "mc", "kernel", "sweep", "output"}, "root");
  if (root.contains("mode")) {
    c.mode = get_string(root.at("mode"), "mode");
    const auto& modes = run_modes();
    if (std::find(modes.begin(), modes.end(), c.mode) == modes.end()) {
      fail("mode", "unknown mode '" + c.mode + "'");
    }
  }
  if (root.contains("seed")) {
    const Json& s = root.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      fail("seed", "expected an unsigned 64-bit integer");
    }
    c.seed = s.get<std::uint64_t>();
  }

  if (root.contains("problem")) {
    const Json& p = root.at("problem");
    check_keys(p, {"measure", "T", "B", "C", "D", "F", "Q", "N", "lambda_margin", "lyapunov"},
               "problem");
    if (p.contains("measure")) c.problem.measure = parse_measure(p.at("measure"), "problem.measure");
    read(p, "T", c.problem.horizon, get_number, "problem");
    auto& lq = c.problem.lq;
    read(p, "B", lq.B, get_matrix, "problem");
    read(p, "C", lq.C, get_matrix, "problem");
    read(p, "D", lq.D, get_matrix, "problem");
    read(p, "F", lq.F, get_matrix, "problem");
    read(p, "Q", lq.Q, get_matrix, "problem");
    read(p, "N", lq.N, get_matrix, "problem");
    read(p, "lambda_margin", lq.lambda_margin, get_number, "problem");
    if (p.contains("lyapunov")) {
      const Json& l = p.at("lyapunov");
      check_keys(l, {"Qtilde", "Btilde", "Dtilde"}, "problem.lyapunov");
      if (l.contains("Qtilde")) c.problem.qtilde = get_matrix(l.at("Qtilde"), "problem.lyapunov.Qtilde");
      if (l.contains("Btilde")) c.problem.btilde = get_matrix(l.at("Btilde"), "problem.lyapunov.Btilde");
      if (l.contains("Dtilde")) c.problem.dtilde = get_matrix(l.at("Dtilde"), "problem.lyapunov.Dtilde");
    }
  }
  if (root.contains("solver")) {
    const Json& s = root.at("solver");
    check_keys(s, {"riccati_method", "time_steps", "outer_tol", "max_outer_iter", "lyapunov_method",
                   "picard_lambda", "picard_tol", "picard_max_iter", "inner_tol", "inner_max_iter",
                   "nhat_floor", "check_stride", "oracle_dt"},
               "solver");
    auto& v = c.solver;
    read(s, "riccati_method", v.riccati_method, get_string, "solver");
    read(s, "time_steps", v.time_steps, get_positive, "solver");
    read(s, "outer_tol", v.outer_tol, get_number, "solver");
    read(s, "max_outer_iter", v.max_outer_iter, get_positive, "solver");
    read(s, "lyapunov_method", v.lyapunov_method, get_string, "solver");
    read(s, "picard_lambda", v.picard_lambda, get_number, "solver");
    read(s, "picard_tol", v.picard_tol, get_number, "solver");
    read(s, "picard_max_iter", v.picard_max_iter, get_positive, "solver");
    read(s, "inner_tol", v.inner_tol, get_number, "solver");
    read(s, "inner_max_iter", v.inner_max_iter, get_positive, "solver");
    read(s, "nhat_floor", v.nhat_floor, get_number, "solver");
    read(s, "check_stride", v.check_stride, get_count, "solver");
    read(s, "oracle_dt", v.oracle_dt, get_number, "solver");
    if (v.riccati_method != "iterative" && v.riccati_method != "direct") {
      fail("solver.riccati_method", "expected 'iterative' or 'direct'");
    }
    lyapunov_method_from_string(v.lyapunov_method);
    if (!(v.oracle_dt > 0.0)) fail("solver.oracle_dt", "expected a positive number");
  }
  if (root.contains("mc")) {
    const Json& m = root.at("mc");
    check_keys(m, {"paths", "steps", "antithetic", "t", "phi"}, "mc");
    read(m, "paths", c.mc.paths, get_positive, "mc");
    read(m, "steps", c.mc.steps, get_positive, "mc");
    read(m, "antithetic", c.mc.antithetic, get_bool, "mc");
    read(m, "t", c.mc.t, get_number, "mc");
    if (m.contains("phi")) c.mc.phi = get_matrix(m.at("phi"), "mc.phi");
  }
  if (root.contains("kernel")) {
    const Json& k = root.at("kernel");
    check_keys(k, {"t_min", "t_max", "points"}, "kernel");
    read(k, "t_min", c.kernel.t_min, get_number, "kernel");
    read(k, "t_max", c.kernel.t_max, get_number, "kernel");
    read(k, "points", c.kernel.points, get_count, "kernel");
  }
  if (root.contains("sweep")) {
    const Json& s = root.at("sweep");
    check_keys(s, {"axis", "values"}, "sweep");
    read(s, "axis", c.sweep.axis, get_string, "sweep");
    if (s.contains("values")) {
      const Json& v = s.at("values");
      if (!v.is_array()) fail("sweep.values", "expected an array of numbers");
      c.sweep.values.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        c.sweep.values.push_back(get_number(v[i], "sweep.values[" + std::to_string(i) + "]"));
      }
    }
    const std::string& a = c.sweep.axis;
    if (a != "n" && a != "H" && a != "T" && a != "time_steps") {
      fail("sweep.axis", "expected one of n, H, T, time_steps");
    }
  }
  if (root.contains("output")) {
    const Json& o = root.at("output");
    check_keys(o, {"dir", "write_field", "field_stride"}, "output");
    read(o, "dir", c.output.dir, get_string, "output");
    read(o, "write_field", c.output.write_field, get_bool, "output");
    read(o, "field_stride", c.output.field_stride, get_count, "output");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  Json root;
  root["mode"] = c.mode;
  root["seed"] = c.seed;
  Json p;
  p["measure"] = measure_json(c.problem.measure);
  p["T"] = c.problem.horizon;
  const auto& lq = c.problem.lq;
  p["B"] = matrix_json(lq.B);
  p["C"] = matrix_json(lq.C);
  p["D"] = matrix_json(lq.D);
  p["F"] = matrix_json(lq.F);
  p["Q"] = matrix_json(lq.Q);
  p["N"] = matrix_json(lq.N);
  p["lambda_margin"] = lq.lambda_margin;
  Json l = Json::object();
  if (c.problem.qtilde) l["Qtilde"] = matrix_json(*c.problem.qtilde);
  if (c.problem.btilde) l["Btilde"] = matrix_json(*c.problem.btilde);
  if (c.problem.dtilde) l["Dtilde"] = matrix_json(*c.problem.dtilde);
  p["lyapunov"] = l;
  root["problem"] = p;

  const auto& s = c.solver;
  root["solver"] = Json{{"riccati_method", s.riccati_method},
                        {"time_steps", s.time_steps},
                        {"outer_tol", s.outer_tol},
                        {"max_outer_iter", s.max_outer_iter},
                        {"lyapunov_method", s.lyapunov_method},
                        {"picard_lambda", s.picard_lambda},
                        {"picard_tol", s.picard_tol},
                        {"picard_max_iter", s.picard_max_iter},
                        {"inner_tol", s.inner_tol},
                        {"inner_max_iter", s.inner_max_iter},
                        {"nhat_floor", s.nhat_floor},
                        {"check_stride", s.check_stride},
                        {"oracle_dt", s.oracle_dt}};
  Json mc{{"paths", c.mc.paths}, {"steps", c.mc.steps}, {"antithetic", c.mc.antithetic}, {"t", c.mc.t}};
  if (c.mc.phi) mc["phi"] = matrix_json(*c.mc.phi);
  root["mc"] = mc;
  root["kernel"] = Json{{"t_min", c.kernel.t_min}, {"t_max", c.kernel.t_max}, {"points", c.kernel.points}};
  root["sweep"] = Json{{"axis", c.sweep.axis}, {"values", c.sweep.values}};
  root["output"] = Json{{"dir", c.output.dir},
                        {"write_field", c.output.write_field},
                        {"field_stride", c.output.field_stride}};
  return root.dump(2) + "\n";
}

}  // namespace kric
