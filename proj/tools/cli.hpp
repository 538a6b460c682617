#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace phases::cli {

enum ExitCode : int { kSuccess = 0, kError = 1, kInfeasible = 2 };

/// Runs the command line `args` (args[0] is the program name). Primary JSON
/// or CSV output goes to `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phases::cli
