#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace artbridge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Entry point behind the `artbridge` binary. `args` excludes the program
// name. Diagnostics go to `err`; `out` only carries piped data (JSON
// written when no --out is given).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace artbridge::cli
