#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace genscale::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes are part of the command-line contract.
enum ExitCode : int { kOk = 0, kComputeFailure = 1, kUsageError = 2 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs one subcommand (estimate, fit, backtest, envelope, plan, synth).
/// `args` excludes the program name. Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace genscale::cli
