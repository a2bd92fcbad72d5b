#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dxt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `dxt` invocation. `args` excludes the program name.
/// Returns 0 on success, 1 on a pipeline error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace dxt::cli
