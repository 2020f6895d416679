#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace melodic::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInputError = 1,
    kNotConverged = 2,
    kValidationFailed = 3,
};

/// Runs one command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace melodic::cli
