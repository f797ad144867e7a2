#pragma once

#include <string>
#include <vector>

#include "speckle/error.hpp"

namespace speckle::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kGenericFailure = 1,
  kUsageError = 2,      ///< bad flags or config
  kIoError = 3,         ///< missing/unreadable files, malformed stack or CSV
  kInvalidInput = 4,    ///< inputs violate a precondition (geometry, span, frames)
  kFitFailure = 5,      ///< fit diverged or data carries no modulation
};

int exit_code(ErrorKind kind) noexcept;

/// Entry point of the `speckle` executable.
int run(int argc, char** argv);
/// Same, with argv[0] omitted.
int run(const std::vector<std::string>& args);

}  // namespace speckle::cli
