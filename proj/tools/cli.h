#ifndef QRMI_TOOLS_CLI_H
#define QRMI_TOOLS_CLI_H

#include <ostream>
#include <string>
#include <vector>

namespace qrmi::cli {

/// Exit codes of the command-line tool.
enum ExitCode {
    kOk = 0,
    kValidation = 1,
    kNonConvergence = 2,
    kInvariantViolation = 3,
};

/// Runs the tool on `args` (without the program name). Results go to `out`
/// unless --output names a file; diagnostics go to `err`.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// "a:b:step" (inclusive of b up to rounding), "x,y,z" or a single value;
/// "inf" is accepted. Throws std::invalid_argument on malformed or empty grids.
std::vector<double> parse_grid(const std::string &text);
std::vector<int> parse_int_grid(const std::string &text);

}  // namespace qrmi::cli

#endif  // QRMI_TOOLS_CLI_H
