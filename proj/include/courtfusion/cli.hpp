#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace courtfusion::cli {

enum ExitCode : int {
  kSuccess = 0,
  kStrictFailure = 1,
  kInputError = 2,
  kPipelineError = 3,
};

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace courtfusion::cli
