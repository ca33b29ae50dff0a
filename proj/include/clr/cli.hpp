#ifndef CLR_CLI_HPP
#define CLR_CLI_HPP

#include <iosfwd>

namespace clr {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitMalformed = 2,     // unreadable or malformed input, invalid sizes/flags
  kExitShape = 3,         // shape mismatch between files or model and input
  kExitOptimization = 4,  // optimization failure, zero beta
  kExitGradient = 5,      // analytic and numeric gradients disagree
};

/// Runs one subcommand (fit, predict, cv, simulate, gradcheck, rank).
/// Reports go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace clr

#endif  // CLR_CLI_HPP
