#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "quenchlab/config.hpp"

namespace quenchlab {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitNumerical = 2,
    kExitUnresolved = 3,
};

/// Nodal values of an initial-data spec: a constant or expression of x, or
/// "file:<path>" holding one value per node or two columns `x value`
/// (linear interpolation). `key` names the config entry in errors.
Eigen::VectorXd evaluate_initial(const std::string& spec, const Grid& grid, const std::string& key);

struct RunOptions {
    std::filesystem::path out_dir;
    std::optional<long long> seed;
};

struct RunSummary {
    int exit_code = kExitOk;
    std::vector<std::filesystem::path> files; // manifest last
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes its artifacts plus `manifest_<sub>.json`.
/// Throws on configuration or numerical errors; see exit_code_for.
RunSummary run_subcommand(const RunConfig& config, const std::string& subcommand,
                          const RunOptions& options, std::ostream& log);

int exit_code_for(const std::exception& e);

/// run_subcommand with errors reported on `err` and mapped to exit codes.
int run_experiment(const RunConfig& config, const std::string& subcommand, const RunOptions& options,
                   std::ostream& log, std::ostream& err);

} // namespace quenchlab
