#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hsband::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // bad flags, config or input validation
inline constexpr int kExitRuntime = 3;  // I/O, malformed containers, aborted runs

/// Runs one hsband invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hsband::cli
