#pragma once

#include "blayer/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace blayer {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitSolver = 3,
    kExitNotConverged = 4,
};

/// Subcommand names in the order the help text lists them.
const std::vector<std::string>& cli_commands();

/// Defaults for a subcommand run without --config. discontinuity-demo gets the kinked
/// three-dimensional map with data 1/3 + cos(2πy_3); the others a Laplace cell problem
/// with data cos(2πy_1) along e_2.
ExperimentConfig default_config(const std::string& command);

/// Runs one subcommand on a validated config, writing into `out_dir` through a single
/// OutputWriter and finishing with manifest.json. Progress and summary lines go to `log`.
/// Returns an ExitCode; errors propagate as exceptions.
int run_experiment(const std::string& command, const ExperimentConfig& config, const std::filesystem::path& out_dir,
                   std::ostream& log);

/// Full command line: parses flags, loads and validates the config, maps exceptions to
/// exit codes. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace blayer
