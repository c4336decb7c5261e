#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edgemarket::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kNotConverged = 3,
  kCertificateFailed = 4,
};

/// Runs one command line (args[0] is the program name). Normal output goes
/// to `out`, diagnostics to `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edgemarket::cli
