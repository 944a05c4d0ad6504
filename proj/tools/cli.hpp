#pragma once

#include <iosfwd>

namespace mmm::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitConfig = 2,
  kExitNotConverged = 3,
  kExitArtifactMismatch = 4,
};

/// Entry point for `mmm <command> [flags]`. Tables and progress go to `out`,
/// diagnostics to `err`.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace mmm::cli
