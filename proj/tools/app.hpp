#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crm::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;

/// Runs the crmfk command line. `args` excludes the program name. Results go
/// to `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crm::app
