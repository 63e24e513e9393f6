#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bother::cli {

// Stable exit codes for harnesses.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kEmptyData = 3,
  kNumericalFailure = 4,
};

// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "BOTHER_OUT";

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bother::cli
