#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fidlens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

// Runs one command line. `args` excludes the program name. Data goes to
// `out`; progress and error messages go to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

// Fixed-point formatting that ignores the global locale.
std::string FormatFixed(double value, int decimals);

}  // namespace fidlens::cli
