#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qgraph::cli {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kSuccess = 0,
  kInputError = 2,
  kPreconditionError = 3,
  kNumericalError = 4,
};

// Runs one command line (without the program name). Results go to `out`
// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qgraph::cli
