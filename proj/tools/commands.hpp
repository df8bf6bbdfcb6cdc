#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stairkit::cli {

// Stable exit codes for scripting.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kDegenerate = 3,
  kInsufficientData = 4,
};

// Runs the stairkit command line with args (args[0] is the program name).
// Machine-readable output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stairkit::cli
