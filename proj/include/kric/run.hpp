#pragma once

#include <iostream>
#include <string>

#include "kric/config.hpp"

namespace kric {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitNonConvergence = 3,
  kExitPropertyFailure = 4,
};

struct RunContext {
  std::ostream* out = &std::cout;  // one line per property check
  std::ostream* err = &std::cerr;  // diagnostics
  bool quiet = false;
};

/// Dispatches on config.mode, writes artifacts under config.output.dir and
/// returns an ExitCode. Never throws for solver or configuration problems.
int run(const RunConfig& config, const RunContext& ctx = {});

}  // namespace kric
