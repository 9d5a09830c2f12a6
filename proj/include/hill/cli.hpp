#pragma once

#include <string>
#include <vector>

namespace hill {

/// Command-line front end.  `args` holds the arguments after the program
/// name, in command-line order.  Returns the process exit code:
///   0  success,
///   1  input error (bad flags, malformed or missing files),
///   2  numerical failure (with a diagnostic on standard error).
int run(const std::vector<std::string>& args);

} // namespace hill
