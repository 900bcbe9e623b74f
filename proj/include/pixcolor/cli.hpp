#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pixcolor {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `pixcolor` executable. `args` excludes the program
/// name. Usage errors return 2, runtime failures 1, success 0.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pixcolor
