#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hyperlab::cli {

enum ExitCode : int {
    ExitOk = 0,
    ExitInternal = 1,
    ExitValidation = 2,
    ExitNumerical = 3,
    ExitGoldenMismatch = 4,
};

/// Runs `hyperlab <subcommand> --config PATH [--out DIR] [--plot] [--threads N]
/// [--golden PATH]` with args[0] being the program name.  Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hyperlab::cli
