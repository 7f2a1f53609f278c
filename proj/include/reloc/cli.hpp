#pragma once

#include <string>
#include <vector>

namespace reloc {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitNonConvergence = 2, kExitInvalidConfig = 3, kExitIo = 4 };

/// args excludes the program name: {subcommand, flags...}.
int run_command(const std::vector<std::string>& args);
int run_command(int argc, char** argv);

}  // namespace reloc
