#pragma once

namespace aeplan::harness {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

/// Entry point of the `aeplan` tool. Prints usage and returns kExitConfig on
/// unknown flags or subcommands.
int cli_main(int argc, char** argv);

}  // namespace aeplan::harness
