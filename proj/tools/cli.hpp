#ifndef SNOWFUSE_TOOLS_CLI_HPP
#define SNOWFUSE_TOOLS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace snowfuse::cli {

/// Runs one subcommand. `args` excludes the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kData = 3;
inline constexpr int kNumerical = 4;

}  // namespace snowfuse::cli

#endif  // SNOWFUSE_TOOLS_CLI_HPP
