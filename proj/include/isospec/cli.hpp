#pragma once

namespace isospec {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

// Entry point of the `isospec` tool: subcommands models, simulate, estimate
// and verify. Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace isospec
