#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aerotraj::cli {

/// Parses `args` (args[0] is the program name) and runs the chosen
/// subcommand. Returns the process exit code; help text goes to `out`,
/// diagnostics to `err`. Data is only ever written to files.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aerotraj::cli
