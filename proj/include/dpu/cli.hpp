#pragma once

#include <iosfwd>

namespace dpu::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,      ///< unknown subcommand or flag, bad flag value
  kData = 2,       ///< unreadable or invalid data, config or priors
  kNumerical = 3,  ///< divergence or other numerical failure
};

/// Runs `dpu <subcommand> ...`. Subcommands: simulate, split, train, predict,
/// evaluate, bias-check.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dpu::cli
