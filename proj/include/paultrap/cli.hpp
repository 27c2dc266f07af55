#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace paultrap::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kValidation = 2,
    kConvergence = 3,
    kUsage = 64,
};

/// Runs one command line (without the program name). Results go to `out` or the --output file;
/// errors go to `err` as a JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace paultrap::cli
