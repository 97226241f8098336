#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "quenchlab/quench_analysis.hpp"
#include "quenchlab/shooting.hpp"
#include "quenchlab/stationary.hpp"

namespace quenchlab {

namespace fs = std::filesystem;

// t,min_u,x_argmin_u,min_v,x_argmin_v,dt,psi_gap (dt: time since the previous row)
void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory, const Grid& grid);
// t,x,u,v
void write_snapshots_csv(const fs::path& path, const Trajectory& trajectory, const Grid& grid);
// log_T_minus_t,log_min_u,log_min_v (natural logs)
void write_rates_csv(const fs::path& path, const Trajectory& trajectory, double correction);
// lambda,mu,class,T_est
void write_region_csv(const fs::path& path, const RegionMap& map);
// lambda,mu_star_lo,mu_star_hi
void write_boundary_csv(const fs::path& path, const RegionMap& map);
// delta,regime,T_delta,floor_u,floor_v
void write_shooting_csv(const fs::path& path, const std::vector<ShootingRecord>& records);
// x,w,z
void write_stationary_csv(const fs::path& path, const Grid& grid, const StationaryPair& pair);

/// Reads trajectory.csv back. Argmin abscissae are mapped to the nearest node
/// of the grid.
Trajectory read_trajectory_csv(const fs::path& path, const Grid& grid);

nlohmann::json to_json(const RateFit& fit);
nlohmann::json to_json(const Outcome& outcome);
nlohmann::json report_to_json(const QuenchReport& report);

void write_json(const fs::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const fs::path& path);

std::string sha256_file(const fs::path& path);

struct ManifestInfo {
    std::string subcommand;
    std::string config_text;
    std::optional<long long> seed;
    double wall_seconds = 0.0;
    std::vector<fs::path> files;
};

/// Config echo, versions, wall time, and name/size/sha256 of every output.
nlohmann::json build_manifest(const ManifestInfo& info);

} // namespace quenchlab
