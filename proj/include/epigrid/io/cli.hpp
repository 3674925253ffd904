#pragma once

#include <iosfwd>

namespace epigrid {

/// Exit statuses of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2, kExitInvariant = 3 };

/// Parses argv and runs one subcommand. Diagnostics go to `err`, progress to `out`.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace epigrid
