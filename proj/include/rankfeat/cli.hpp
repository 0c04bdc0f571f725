#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rankfeat::cli {

// Process exit codes; stable contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIoOrFormat = 1;
inline constexpr int kExitValidation = 2;

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rankfeat::cli
