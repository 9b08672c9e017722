#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tipping {

inline constexpr int kSchemaVersion = 1;

enum ExitCode { kExitOk = 0, kExitVerifyFailed = 1, kExitUsage = 2, kExitNumerical = 3 };

struct RunSpec {
    std::string config_path;  // empty: built-in defaults
    std::string command;      // validate | solve | verify | simulate | oracle | sweep-epsilon | report
    std::string output_dir = "out";
    std::vector<std::string> overrides;  // section.key=value, applied after the config file
};

const std::vector<std::string>& known_commands();

// Runs one command; errors are reported as JSON on err and mapped to exit codes.
int run_command(const RunSpec& spec, std::ostream& log, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace tipping
