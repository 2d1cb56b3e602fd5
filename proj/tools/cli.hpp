#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace piecehaz::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,   // fit/bootstrap failure, unknown column, non-nested LRT
    kIoError = 2,   // missing input or unwritable output
    kUsage = 3,     // bad flags
    kBadData = 4,   // parse or validation error in the dataset
};

// Runs one command line (args[0] is the program name). Reports go to `out`,
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace piecehaz::cli
