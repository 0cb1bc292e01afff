#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chartattrib::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kContractError = 2,
  kVerifyMismatch = 3,
};

/// Runs the command line `args` (without the program name). Records go to
/// `out`, diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chartattrib::cli
