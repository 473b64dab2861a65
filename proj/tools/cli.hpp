#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace transitive::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitUsage = 2;

// Runs one command. `args` excludes the program name. Reports go to `out`
// (or to --out when given), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace transitive::cli
