#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqdrift::cli {

/// Runs the command line `args` (without the program name). Returns the exit
/// status: 0 on success, 1 on invalid input, 2 on usage errors.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace seqdrift::cli
