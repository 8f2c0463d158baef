#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mvtrack {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumeric = 4 };

// Entry point behind the command-line tool. Subcommands: simulate, track,
// eval, train-toy, probe, sweep.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Inserts "--key value" for every key=value line of the file named by
// --config, unless the key is already given on the command line.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace mvtrack
