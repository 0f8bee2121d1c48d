#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace css {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInvalid = 2, kExitSolver = 3 };

/// Entry point of the `css` tool; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace css
