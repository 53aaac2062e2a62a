#pragma once

#include <iosfwd>

#include "blinkflow/error.hpp"

namespace blinkflow::cli {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitParse = 2,
  kExitInsufficientData = 3,
  kExitIo = 4,
  kExitDegenerateLabeling = 5,
  kExitTrainingFailure = 6,
};

int exit_code_for(ErrorKind kind);

// Entry point of the `blinkflow` tool. Human-readable output goes to `out`,
// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace blinkflow::cli
