#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace webxaii {

/// Entry point of the `webxaii` tool. Exit codes: 0 success, 1 the command
/// ran and found a problem (validation errors, rejected users, unknown
/// protocol, incomplete simulation), 2 unusable input (unreadable file, bad
/// arguments, port already taken).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with args not including the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace webxaii
