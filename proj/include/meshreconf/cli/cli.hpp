#pragma once

#include <ostream>

namespace meshreconf::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,       // I/O and internal errors
  kExitParse = 2,       // bad arguments, malformed scenario/plan/LP input
  kExitInfeasible = 3,  // no feasible plan exists, including horizon too short
  kExitLimit = 4,       // time or node limit hit before any incumbent
  kExitInvalid = 5,     // plan fails validation
};

// Runs one command line. Results go to files under --out; progress and
// diagnostics go to the streams.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace meshreconf::cli
