#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace boxcd {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNumerical = 4,
};

/// Runs one command line (args exclude the program name). Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace boxcd
