#pragma once

#include <ostream>

namespace crowdsim {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kNumericError = 2,
  kViolation = 3,
};

/// Entry point of the crowdsim tool: subcommands run, bounds, gateaux and stability.
int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crowdsim
