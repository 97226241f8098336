#pragma once

#include <filesystem>
#include <string>

#include "quenchlab/quench_analysis.hpp"

namespace quenchlab {

struct RegionSettings {
    double lambda_lo = 0.0;
    double lambda_hi = 0.5;
    double mu_lo = 0.0;
    double mu_hi = 0.5;
    std::size_t resolution = 8;
    std::size_t bisect_steps = 6;
    bool certificate = true;
    double escalation = 4.0;

    bool operator==(const RegionSettings&) const = default;
};

struct ShootingSettings {
    std::size_t delta_samples = 33;
    std::size_t bisect_steps = 20;
    double quench_threshold = 1e-18;

    bool operator==(const ShootingSettings&) const = default;
};

struct StationarySettings {
    double newton_tol = 1e-12;
    std::size_t max_iterations = 100;

    bool operator==(const StationarySettings&) const = default;
};

struct RunConfig {
    double a = -2.0;
    double b = 2.0;
    std::size_t n_half = 100;
    std::string kernel = "epanechnikov";
    SystemParams params;
    // A constant, an expression of x, or "file:<path>".
    std::string initial_u = "1";
    std::string initial_v = "1";
    SolverConfig solver;
    std::string output_dir = "out";
    RateWindow window;
    double cluster_radius = 0.0;
    RegionSettings region;
    ShootingSettings shooting;
    StationarySettings stationary;
    // Input for the rates subcommand; empty means <output_dir>/trajectory.csv.
    std::string rates_trajectory;

    bool operator==(const RunConfig&) const = default;
};

/// Flat `section.key = value` text. Blank lines and `#` comments are ignored,
/// values may be double-quoted. Unknown, duplicate or malformed keys and
/// failed validation throw ConfigError naming the key. Relative file paths
/// are resolved against base_dir.
RunConfig parse_config_text(const std::string& text,
                            const std::filesystem::path& base_dir = std::filesystem::current_path());

RunConfig parse_config(const std::filesystem::path& path);

/// Every key, one per line, with values that parse back exactly.
std::string emit_config(const RunConfig& config);

/// Field checks shared by the parser; throws ConfigError naming the key.
void validate_config(const RunConfig& config);

} // namespace quenchlab
