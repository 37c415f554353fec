#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vspec {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the `vspec` executable. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vspec
