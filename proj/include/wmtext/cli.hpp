#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wmtext::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitIo = 3,
  kExitInternal = 4,
};

/// Entry point shared by the `wmtext` binary and the tests. `args[0]` is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wmtext::cli
