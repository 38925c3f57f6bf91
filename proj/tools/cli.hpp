#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aog::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

/// Runs one invocation; args excludes the program name. Primary output goes
/// to `out`, the resolved configuration and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace aog::cli
