#pragma once

#include <iosfwd>

namespace ggsa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitGradcheckFailed = 3;

// Subcommands: gen-data, train, eval, bench, gradcheck. Returns the process
// exit code; nothing escapes as an exception.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ggsa::cli
