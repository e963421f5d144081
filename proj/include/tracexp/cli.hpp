#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tracexp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitTransport = 4;

inline constexpr const char* kToolName = "tracexp";
inline constexpr const char* kToolVersion = "0.1.0";

// Runs one subcommand. args excludes the program name. Never throws.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tracexp::cli
