#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace armle::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kDataFormat = 3,
  kNumeric = 4,
};

/// Runs one command line (argv[0] is the program name). Normal output goes to
/// `out`, diagnostics and progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace armle::cli
