#include "kric/run.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <future>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kric/errors.hpp"
#include "kric/io.hpp"
#include "kric/mcsim.hpp"
#include "kric/oracle.hpp"
#include "kric/simd/kernels.hpp"

namespace kric {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Collects check outcomes and prints one line per check.
class Checklist {
 public:
  explicit Checklist(const RunContext& ctx) : ctx_(ctx) {}

  void add(const std::string& name, bool pass, const std::string& detail) {
    all_ = all_ && pass;
    if (!ctx_.quiet) *ctx_.out << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    json_[name] = pass;
  }
  void info(const std::string& line) const {
    if (!ctx_.quiet) *ctx_.out << line << "\n";
  }
  bool all() const { return all_; }
  const Json& json() const { return json_; }

 private:
  const RunContext& ctx_;
  bool all_ = true;
  Json json_ = Json::object();
};

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << x;
  return os.str();
}

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::string path_in(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.output.dir) / name).string();
}

void write_json(const RunConfig& c, const std::string& name, const Json& j) {
  write_text_file(path_in(c, name), j.dump(2) + "\n");
}

void write_metadata(const RunConfig& c) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  Json j{{"mode", c.mode},
         {"seed", c.seed},
         {"created_utc", ts.str()},
         {"version", kVersion},
         {"isa", std::string(simd::isa_name(simd::active_isa()))}};
  write_json(c, "metadata.json", j);
}

std::size_t field_stride(const RunConfig& c) {
  if (c.output.field_stride > 0) return c.output.field_stride;
  return std::max<std::size_t>(1, c.solver.time_steps / 100);
}

Json checks_json(const PropertyChecks& k) {
  return Json{{"terminal_zero", k.terminal_zero},
              {"symmetry_defect", number(k.symmetry_defect)},
              {"symmetry_ok", k.symmetry_ok},
              {"min_gram_eigenvalue", number(k.min_gram_eigenvalue)},
              {"psd_ok", k.psd_ok},
              {"worst_order_violation", number(k.worst_order_violation)},
              {"monotone_ok", k.monotone_ok},
              {"min_nhat_eigenvalue", number(k.min_nhat_eigenvalue)},
              {"nhat_floor_ok", k.nhat_floor_ok},
              {"nhat_margin_ok", k.nhat_margin_ok},
              {"u_time_monotone", k.u_time_monotone},
              {"u_iteration_monotone", k.u_iteration_monotone},
              {"cauchy_monotone", k.cauchy_monotone}};
}

Json riccati_report_json(const RiccatiReport& r) {
  Json diffs = Json::array();
  for (double d : r.differences) diffs.push_back(number(d));
  return Json{{"method", r.method},
              {"steps", r.steps},
              {"outer_iterations", r.outer_iterations},
              {"differences", diffs},
              {"outer_tol", number(r.outer_tol)},
              {"gamma0_sup_l1", number(r.gamma0_sup_l1)},
              {"sup_l1_norm", number(r.sup_l1_norm)},
              {"estimate_m", number(r.estimate_m)},
              {"residual", number(r.residual)},
              {"step_error_estimate", number(r.step_error_estimate)},
              {"checks", checks_json(r.checks)}};
}

bool residual_ok(const RiccatiReport& r) {
  // Round-off allowance for problems whose step error vanishes identically.
  return r.residual <= 10.0 * r.step_error_estimate + 1e-12 * (1.0 + r.sup_l1_norm);
}

void report_riccati_checks(Checklist& cl, const RiccatiReport& r, double lambda) {
  const PropertyChecks& k = r.checks;
  cl.add("terminal_zero", k.terminal_zero, "Gamma_T == 0");
  cl.add("symmetry", k.symmetry_ok, "relative defect " + sci(k.symmetry_defect) + " <= 1e-10");
  cl.add("nonnegative", k.psd_ok, "min scaled Gram eigenvalue " + sci(k.min_gram_eigenvalue));
  if (r.method == "iterative") {
    cl.add("iterate_monotone", k.monotone_ok,
           "worst scaled eigenvalue of Gamma^i - Gamma^{i+1}: " + sci(k.worst_order_violation));
    cl.add("u_iteration_monotone", k.u_iteration_monotone, "U^i >= U^{i+1}");
    cl.add("cauchy_monotone", k.cauchy_monotone,
           std::to_string(r.outer_iterations) + " iterations, last difference " +
               sci(r.differences.empty() ? 0.0 : r.differences.back()));
  }
  cl.add("u_time_monotone", k.u_time_monotone, "U_s >= U_t for s <= t, U psd");
  cl.add("nhat_floor", k.nhat_floor_ok && k.nhat_margin_ok,
         "min eig Nhat " + sci(k.min_nhat_eigenvalue) + " vs lambda " + sci(lambda));
  cl.add("mild_residual", residual_ok(r),
         "residual " + sci(r.residual) + ", step error estimate " + sci(r.step_error_estimate));
}

RiccatiSolution solve_configured(std::shared_ptr<const MeasureAtoms> mu, const RunConfig& c) {
  const RiccatiSolveOptions opts = c.solver.riccati_options();
  if (c.solver.riccati_method == "direct") {
    return solve_riccati_direct(mu, c.problem.lq, c.problem.horizon, opts);
  }
  return solve_riccati_iterative(mu, c.problem.lq, c.problem.horizon, opts);
}

// Modes ----------------------------------------------------------------------

int mode_solve_riccati(const RunConfig& c, Checklist& cl) {
  auto mu = std::make_shared<const MeasureAtoms>(c.problem.measure.build());
  RiccatiSolution sol = solve_configured(mu, c);
  std::ostringstream ms, fs, ts;
  write_measure_csv(ms, *mu);
  write_text_file(path_in(c, "measure.csv"), ms.str());
  if (c.output.write_field) {
    write_field_csv(fs, sol.gamma, field_stride(c));
    write_text_file(path_in(c, "solution.csv"), fs.str());
    write_feedback_csv(ts, sol.theta, *mu, field_stride(c));
    write_text_file(path_in(c, "feedback.csv"), ts.str());
  }
  report_riccati_checks(cl, sol.report, c.problem.lq.lambda_margin);
  Json j = riccati_report_json(sol.report);
  j["feedback_sup_norm"] = number(sol.theta.sup_norm());
  j["passed"] = cl.all();
  write_json(c, "report.json", j);
  cl.info("solve-riccati: sup_t |Gamma_t|_L1 = " + sci(sol.report.sup_l1_norm) + ", M = " +
          sci(sol.report.estimate_m));
  return cl.all() ? kExitOk : kExitPropertyFailure;
}

bool qtilde_symmetric_psd(const RunConfig& c) {
  const Eigen::MatrixXd q = c.problem.qtilde.value_or(c.problem.lq.Q);
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.norm())) return false;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (q + q.transpose()))
             .eigenvalues()
             .minCoeff() >= -1e-12 * (1.0 + q.norm());
}

void check_lyapunov_shapes(const RunConfig& c, const MeasureAtoms& mu) {
  const Eigen::MatrixXd q = c.problem.qtilde.value_or(c.problem.lq.Q);
  const Eigen::MatrixXd b = c.problem.btilde.value_or(c.problem.lq.B);
  const Eigen::MatrixXd d = c.problem.dtilde.value_or(c.problem.lq.D);
  if (q.rows() != mu.d() || q.cols() != mu.d()) throw ConfigError("Qtilde must be d x d");
  if (b.rows() != mu.d_prime() || b.cols() != mu.d()) throw ConfigError("Btilde must be d' x d");
  if (d.rows() != mu.d_prime() || d.cols() != mu.d()) throw ConfigError("Dtilde must be d' x d");
}

int mode_solve_lyapunov(const RunConfig& c, Checklist& cl) {
  auto mu = std::make_shared<const MeasureAtoms>(c.problem.measure.build());
  check_lyapunov_shapes(c, *mu);
  const LyapunovCoefficients coeffs = c.problem.lyapunov_coefficients(mu->size());
  const LyapunovSolution sol =
      solve_lyapunov(mu, coeffs, c.problem.horizon, c.solver.lyapunov_options());
  const LyapunovReport& r = sol.report;
  if (c.output.write_field) {
    std::ostringstream fs;
    write_field_csv(fs, sol.field, field_stride(c));
    write_text_file(path_in(c, "solution.csv"), fs.str());
  }
  std::ostringstream ms;
  write_measure_csv(ms, *mu);
  write_text_file(path_in(c, "measure.csv"), ms.str());

  cl.add("terminal_zero", sol.field.slice(sol.field.steps()).is_zero(), "Psi_T == 0");
  cl.add("mild_residual", r.residual <= 10.0 * r.step_error_estimate + 1e-12 * (1.0 + r.sup_l1_norm),
         "residual " + sci(r.residual) + ", step error estimate " + sci(r.step_error_estimate));
  Json checks = Json::object();
  if (qtilde_symmetric_psd(c)) {
    const PropertyChecks k = check_solution(sol.field, 1, r.step_error_estimate);
    cl.add("symmetry", k.symmetry_ok, "relative defect " + sci(k.symmetry_defect));
    cl.add("nonnegative", k.psd_ok, "min scaled Gram eigenvalue " + sci(k.min_gram_eigenvalue));
    cl.add("u_time_monotone", k.u_time_monotone, "U_s >= U_t for s <= t");
    checks = checks_json(k);
  } else {
    cl.info("Qtilde is not symmetric psd: positivity checks skipped");
  }
  Json j{{"method", to_string(r.method)},
         {"steps", r.steps},
         {"sup_l1_norm", number(r.sup_l1_norm)},
         {"row_bound", number(r.row_bound)},
         {"col_bound", number(r.col_bound)},
         {"iterations", r.iterations},
         {"residual", number(r.residual)},
         {"step_error_estimate", number(r.step_error_estimate)},
         {"checks", checks},
         {"passed", cl.all()}};
  write_json(c, "report.json", j);
  return cl.all() ? kExitOk : kExitPropertyFailure;
}

int mode_validate(const RunConfig& c, Checklist& cl) {
  auto mu = std::make_shared<const MeasureAtoms>(c.problem.measure.build());
  const LQCoefficients& lq = c.problem.lq;
  RiccatiSolveOptions opts = c.solver.riccati_options();
  const RiccatiSolution it = solve_riccati_iterative(mu, lq, c.problem.horizon, opts);
  const RiccatiSolution dr = solve_riccati_direct(mu, lq, c.problem.horizon, opts);
  report_riccati_checks(cl, it.report, lq.lambda_margin);

  const double cross = sup_l1_distance(it.gamma, dr.gamma);
  const double cross_tol = 10.0 * (it.report.outer_tol + it.report.step_error_estimate);
  cl.add("direct_agreement", cross <= cross_tol,
         "sup_t L1 difference " + sci(cross) + " <= " + sci(cross_tol));

  const DenseRiccatiSystem sys = assemble_dense(*mu, lq, c.solver.oracle_dt);
  const DenseTrajectory traj = integrate_rk4(sys, it.gamma.grid());
  const KernelField oracle = trajectory_field(traj, mu);
  double oracle_scale = 0.0;
  for (std::size_t s = 0; s <= oracle.steps(); ++s) oracle_scale = std::max(oracle_scale, l1_norm(oracle, s));
  const double oracle_abs = sup_l1_distance(it.gamma, oracle);
  const double oracle_rel = oracle_scale > 0.0 ? oracle_abs / oracle_scale : oracle_abs;
  cl.add("oracle_agreement", oracle_rel <= 1e-6,
         "relative sup_t L1 difference to RK4 " + sci(oracle_rel) + " <= 1e-6");
  if (traj.stiffness_warning) cl.info("warning: oracle step exceeds the stiffness guard");

  const CauchySchwarzResult cs = cauchy_schwarz_check(it.gamma.slice(0), *mu, 1000, c.seed);
  cl.add("cauchy_schwarz", cs.max_relative_violation <= 1e-10,
         "max relative violation " + sci(cs.max_relative_violation));

  Json j{{"iterative", riccati_report_json(it.report)},
         {"direct", riccati_report_json(dr.report)},
         {"direct_difference", number(cross)},
         {"oracle_relative_error", number(oracle_rel)},
         {"oracle_absolute_error", number(oracle_abs)},
         {"oracle_dt", number(c.solver.oracle_dt)},
         {"oracle_stiffness_warning", traj.stiffness_warning},
         {"cauchy_schwarz_max_relative_violation", number(cs.max_relative_violation)},
         {"gamma_t0", number(mu->size() ? it.gamma.slice(0).at(0, 0, 0, 0) : 0.0)},
         {"oracle_t0", number(mu->size() ? traj.values[0](0, 0) : 0.0)},
         {"checks", cl.json()},
         {"passed", cl.all()}};
  write_json(c, "validate.json", j);
  return cl.all() ? kExitOk : kExitPropertyFailure;
}

int mode_kernel(const RunConfig& c, Checklist& cl) {
  const MeasureAtoms mu = c.problem.measure.build();
  const auto& k = c.kernel;
  if (!(k.t_min > 0.0) || !(k.t_max > k.t_min) || k.points < 2) {
    throw ConfigError("kernel: need 0 < t_min < t_max and points >= 2");
  }
  const bool fractional = c.problem.measure.kind == MeasureConfig::Kind::fractional;
  const double h = c.problem.measure.hurst;
  std::ostringstream os;
  os << "t";
  for (Eigen::Index a = 0; a < mu.d(); ++a) {
    for (Eigen::Index b = 0; b < mu.d_prime(); ++b) os << ",K_" << a << "_" << b;
  }
  os << ",exact,relative_error\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < k.points; ++i) {
    const double t = k.t_min * std::pow(k.t_max / k.t_min, static_cast<double>(i) /
                                                               static_cast<double>(k.points - 1));
    const Eigen::MatrixXd kt = kernel_eval(mu, t);
    os << format_double(t);
    for (Eigen::Index a = 0; a < kt.rows(); ++a) {
      for (Eigen::Index b = 0; b < kt.cols(); ++b) os << "," << format_double(kt(a, b));
    }
    if (fractional) {
      const double exact = std::pow(t, h - 0.5);
      const double rel = std::abs(kt(0, 0) - exact) / exact;
      worst = std::max(worst, rel);
      os << "," << format_double(exact) << "," << format_double(rel) << "\n";
    } else {
      os << ",,\n";
    }
  }
  write_text_file(path_in(c, "kernel.csv"), os.str());
  Json j{{"atoms", mu.size()},
         {"condition_value", number(check_measure_condition(mu))},
         {"total_variation", number(mu.total_variation())}};
  if (fractional) {
    j["max_relative_error"] = number(worst);
    cl.info("kernel: max relative error against t^(H-1/2) is " + sci(worst));
  }
  write_json(c, "kernel.json", j);
  return kExitOk;
}

int mode_mc_check(const RunConfig& c, Checklist& cl) {
  auto mu = std::make_shared<const MeasureAtoms>(c.problem.measure.build());
  check_lyapunov_shapes(c, *mu);
  const LyapunovCoefficients coeffs = c.problem.lyapunov_coefficients(mu->size());
  LyapunovSolveOptions lo = c.solver.lyapunov_options();
  const LyapunovSolution ref = solve_lyapunov(mu, coeffs, c.problem.horizon, lo);
  const std::size_t idx = ref.field.grid().nearest_index(c.mc.t);
  const double t = ref.field.grid().time(idx);
  if (!(t < c.problem.horizon)) throw ConfigError("mc.t must be below T");

  TestFunction phi;
  if (c.mc.phi) {
    phi.values = *c.mc.phi;
  } else {
    phi.values = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(mu->size()), mu->d_prime());
  }
  const double reference = quadratic_form(ref.field.slice(idx), *mu, phi);
  McOptions mo;
  mo.paths = c.mc.paths;
  mo.steps = c.mc.steps;
  mo.seed = c.seed;
  mo.antithetic = c.mc.antithetic;
  const McResult r = simulate_quadratic_form(*mu, coeffs, phi, t, c.problem.horizon, mo);
  const double diff = r.estimate - reference;
  double z = 0.0;
  bool pass = false;
  if (r.std_error > 0.0) {
    z = diff / r.std_error;
    pass = std::abs(z) <= 3.0;
  } else {
    z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    pass = std::abs(diff) <= 1e-6 * (1.0 + std::abs(reference));
  }
  cl.add("mc_identity", pass,
         "estimate " + sci(r.estimate) + " vs reference " + sci(reference) + ", z = " + sci(z));
  if (r.qtilde_psd_warning) cl.info("warning: Qtilde is not psd on the atom grid");
  if (r.excluded > 0) cl.info("warning: " + std::to_string(r.excluded) + " paths blew up");
  Json j{{"estimate", number(r.estimate)},
         {"std_error", number(r.std_error)},
         {"reference_value", number(reference)},
         {"z_score", number(z)},
         {"paths", r.paths_used},
         {"excluded", r.excluded},
         {"steps", mo.steps},
         {"seed", c.seed},
         {"antithetic", mo.antithetic},
         {"t", number(t)},
         {"fourth_moment", number(r.fourth_moment)},
         {"passed", pass}};
  write_json(c, "mc.json", j);
  return pass ? kExitOk : kExitPropertyFailure;
}

struct SweepPoint {
  double value = 0.0;
  RunConfig config;
  bool ok = false;
  std::string error;
  RiccatiReport report;
  std::vector<Eigen::MatrixXd> u_path;
  std::shared_ptr<KernelField> field;
};

RunConfig sweep_point_config(const RunConfig& base, double v) {
  RunConfig c = base;
  const std::string& axis = base.sweep.axis;
  auto as_count = [&](double x) {
    if (!(x >= 1.0) || x != std::floor(x)) throw ConfigError("sweep: " + axis + " values must be positive integers");
    return static_cast<std::size_t>(x);
  };
  if (axis == "n") {
    if (base.problem.measure.kind == MeasureConfig::Kind::atoms) {
      throw ConfigError("sweep: the n axis needs a density measure");
    }
    c.problem.measure.levels = as_count(v);
  } else if (axis == "H") {
    if (base.problem.measure.kind != MeasureConfig::Kind::fractional) {
      throw ConfigError("sweep: the H axis needs a fractional measure");
    }
    c.problem.measure.hurst = v;
  } else if (axis == "T") {
    c.problem.horizon = v;
  } else {
    c.solver.time_steps = as_count(v);
  }
  return c;
}

SweepPoint run_point(SweepPoint p, bool keep_field) {
  try {
    auto mu = std::make_shared<const MeasureAtoms>(p.config.problem.measure.build());
    RiccatiSolution sol = solve_configured(mu, p.config);
    p.report = sol.report;
    p.ok = sol.report.checks.all_passed() && residual_ok(sol.report);
    if (!p.ok) p.error = "property check failed";
    p.u_path = double_integral_path(sol.gamma);
    if (keep_field) p.field = std::make_shared<KernelField>(std::move(sol.gamma));
  } catch (const std::exception& e) {
    p.ok = false;
    p.error = e.what();
  }
  return p;
}

int mode_sweep(const RunConfig& c, Checklist& cl) {
  if (c.sweep.values.empty()) throw ConfigError("sweep: no values given");
  std::vector<SweepPoint> points;
  for (double v : c.sweep.values) {
    SweepPoint p;
    p.value = v;
    p.config = sweep_point_config(c, v);
    points.push_back(std::move(p));
  }
  const bool keep_field = c.sweep.axis == "time_steps";
  const std::size_t batch = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t b = 0; b < points.size(); b += batch) {
    std::vector<std::future<SweepPoint>> futures;
    const std::size_t e = std::min(points.size(), b + batch);
    for (std::size_t i = b; i < e; ++i) {
      futures.push_back(std::async(std::launch::async, run_point, points[i], keep_field));
    }
    for (std::size_t i = b; i < e; ++i) points[i] = futures[i - b].get();
  }

  std::ostringstream os;
  os << "axis,value,n,time_steps,T,H,outer_iterations,sup_l1_norm,estimate_m,residual,"
        "step_error_estimate,refinement_diff,checks_passed,status\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const SweepPoint& p = points[i];
    const RunConfig& pc = p.config;
    const bool density = pc.problem.measure.kind != MeasureConfig::Kind::atoms;
    std::string refinement;
    if (i > 0 && p.ok && points[i - 1].ok) {
      const SweepPoint& q = points[i - 1];
      if (c.sweep.axis == "n" && p.u_path.size() == q.u_path.size()) {
        double worst = 0.0;
        for (std::size_t s = 0; s < p.u_path.size(); ++s) {
          worst = std::max(worst, (p.u_path[s] - q.u_path[s]).norm());
        }
        refinement = format_double(worst);
      } else if (keep_field && p.field && q.field) {
        const std::size_t fine = p.field->steps();
        const std::size_t coarse = q.field->steps();
        if (fine % coarse == 0) {
          const std::size_t r = fine / coarse;
          double worst = 0.0;
          for (std::size_t s = 0; s <= coarse; ++s) {
            worst = std::max(worst, l1_distance(p.field->slice(s * r), q.field->slice(s),
                                                p.field->measure()));
          }
          refinement = format_double(worst);
        }
      }
    }
    os << c.sweep.axis << "," << format_double(p.value) << ","
       << (density ? std::to_string(pc.problem.measure.levels) : std::to_string(pc.problem.measure.nodes.size()))
       << "," << pc.solver.time_steps << "," << format_double(pc.problem.horizon) << ","
       << (pc.problem.measure.kind == MeasureConfig::Kind::fractional ? format_double(pc.problem.measure.hurst) : "")
       << ",";
    if (p.report.steps > 0) {
      os << p.report.outer_iterations << "," << format_double(p.report.sup_l1_norm) << ","
         << format_double(p.report.estimate_m) << "," << format_double(p.report.residual) << ","
         << format_double(p.report.step_error_estimate);
    } else {
      os << ",,,,";
    }
    os << "," << refinement << "," << (p.ok ? "true" : "false") << ","
       << (p.ok ? "ok" : "\"" + p.error + "\"") << "\n";
    cl.add("sweep " + c.sweep.axis + "=" + format_double(p.value), p.ok,
           p.ok ? "M = " + sci(p.report.estimate_m) : p.error);
  }
  write_text_file(path_in(c, "sweep.csv"), os.str());
  return cl.all() ? kExitOk : kExitPropertyFailure;
}

}  // namespace

int run(const RunConfig& config, const RunContext& ctx) {
  Checklist cl(ctx);
  try {
    int code = kExitOk;
    if (config.mode == "solve-riccati") {
      code = mode_solve_riccati(config, cl);
    } else if (config.mode == "solve-lyapunov") {
      code = mode_solve_lyapunov(config, cl);
    } else if (config.mode == "validate") {
      code = mode_validate(config, cl);
    } else if (config.mode == "kernel") {
      code = mode_kernel(config, cl);
    } else if (config.mode == "mc-check") {
      code = mode_mc_check(config, cl);
    } else if (config.mode == "sweep") {
      code = mode_sweep(config, cl);
    } else {
      throw ConfigError("unknown mode '" + config.mode + "'");
    }
    write_metadata(config);
    return code;
  } catch (const ConfigError& e) {
    *ctx.err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const NonContractionError& e) {
    *ctx.err << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const ConvergenceError& e) {
    *ctx.err << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const NumericalError& e) {
    *ctx.err << "numerical failure: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const FeedbackFloorError& e) {
    *ctx.err << "property failure: " << e.what() << "\n";
    return kExitPropertyFailure;
  } catch (const PropertyViolation& e) {
    *ctx.err << "property failure: " << e.what() << "\n";
    return kExitPropertyFailure;
  } catch (const std::exception& e) {
    *ctx.err << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  }
}

}  // namespace kric
