#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adaedit::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kRuntimeError = 3,
  kCheckFailed = 4,
};

/// Runs one CLI invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adaedit::cli
