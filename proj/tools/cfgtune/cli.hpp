#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfgtune::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kParseError = 2,
  kConstraintError = 3,
  kOracleError = 4,
  kInternalError = 5,
};

// Runs the command line (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cfgtune::cli
