#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fsel {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitSolver = 3 };

// Entry point of the `fsel` tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fsel
