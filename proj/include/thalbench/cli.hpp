#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace thalbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

/// Runs the command line (`args` excludes the program name). Returns the
/// process exit status: 0 on success, 2 for usage or input errors, 1 for
/// anything unexpected.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thalbench::cli
