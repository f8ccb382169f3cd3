// kric_cli: command-line front-end for the kernel Riccati / Lyapunov solvers.
//
//   kric_cli [mode] [--config PATH] [--out DIR] [--seed U64] [--quiet]
//   kric_cli --print-config [--config PATH]
//
// Without a mode subcommand the mode stored in the config file is run.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kric/config.hpp"
#include "kric/errors.hpp"
#include "kric/run.hpp"

namespace {

const char* mode_help(const std::string& mode) {
  if (mode == "solve-riccati") return "Solve the kernel Riccati equation and export the field";
  if (mode == "solve-lyapunov") return "Solve a constant-coefficient kernel Lyapunov equation";
  if (mode == "validate") return "Cross-check iterative, direct and dense RK4 solutions";
  if (mode == "kernel") return "Tabulate K(t) of the configured measure";
  if (mode == "mc-check") return "Compare a Lyapunov quadratic form with Monte Carlo";
  if (mode == "sweep") return "Repeat the Riccati solve along one parameter axis";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel Riccati and Lyapunov equations for measure-parameterized Volterra kernels"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  bool print_config = false;

  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (overrides output.dir)");
  app.add_option("--seed", seed, "Random seed (overrides seed)");
  app.add_flag("--quiet", quiet, "Suppress the per-check summary lines");
  app.add_flag("--print-config", print_config,
               "Print the effective configuration with every default filled in, then exit");

  for (const std::string& mode : kric::run_modes()) app.add_subcommand(mode, mode_help(mode));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kric::kExitOk : kric::kExitConfigError;
  }

  kric::RunConfig config;
  try {
    if (!config_path.empty()) config = kric::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kric::kExitConfigError;
  }
  if (!app.get_subcommands().empty()) config.mode = app.get_subcommands().front()->get_name();
  if (!out_dir.empty()) config.output.dir = out_dir;
  if (seed) config.seed = *seed;

  if (print_config) {
    std::cout << kric::serialize_config(config);
    return kric::kExitOk;
  }
  if (app.get_subcommands().empty() && config_path.empty()) {
    std::cerr << app.help();
    return kric::kExitConfigError;
  }

  kric::RunContext ctx;
  ctx.quiet = quiet;
  return kric::run(config, ctx);
}
