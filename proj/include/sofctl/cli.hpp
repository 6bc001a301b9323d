#pragma once

#include <iosfwd>

namespace sofctl::cli {

enum ExitCode : int {
    kStabilizing = 0,
    kInfeasible = 2,
    kUnstable = 3,
    kInputError = 4,
    kNumericalFailure = 5,
};

/// Runs one command line. Reports go to `out` (or --out), diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sofctl::cli
