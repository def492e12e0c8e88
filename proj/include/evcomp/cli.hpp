#pragma once

#include <string>
#include <vector>

namespace evcomp::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIncompatible = 3;
inline constexpr int kExitPartialFailure = 4;

// Runs the CLI on the given arguments (excluding the program name).
// In-process entry point so that tests can drive subcommands directly.
int run(const std::vector<std::string>& args);

}  // namespace evcomp::cli
