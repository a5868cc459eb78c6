// CLI entry point, also callable in-process for tests. Subcommands:
// fixtures, decimate, expand, deform, render, fit, bench, metrics.
#pragma once

#include <string>
#include <vector>

namespace warpfield {

// Returns the process exit code; errors print one "error: ..." line.
int run_cli(const std::vector<std::string>& args);

}  // namespace warpfield
