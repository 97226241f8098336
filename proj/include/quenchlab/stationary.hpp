#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "quenchlab/integrator.hpp"

namespace quenchlab {

struct StationaryPair {
    Eigen::VectorXd w;
    Eigen::VectorXd z;
    double residual = 0.0;
    std::size_t iterations = 0;
    // Smallest slack in mu^{1/q} < w <= 1 and lambda^{1/p} < z <= 1.
    double lower_margin_w = 0.0;
    double lower_margin_z = 0.0;
    double upper_margin = 0.0;
};

struct NoStationary {
    std::string reason;
};

using StationaryResult = std::variant<StationaryPair, NoStationary>;

struct NewtonOptions {
    double tol = 1e-12;
    std::size_t max_iterations = 100;
    // Tolerance on the upper bound w, z <= 1 (rounding only).
    double upper_slack = 1e-12;
};

/// Damped Newton on F(w, z) = (W w + b - w - lambda z^{-p}, W z + b - z - mu w^{-q}).
/// A converged iterate is only returned if it satisfies the a-priori bounds of
/// stationary pairs; anything else is NoStationary.
StationaryResult solve_stationary_newton(const NonlocalOperator& op, const SystemParams& params,
                                         const Eigen::VectorXd& w0, const Eigen::VectorXd& z0,
                                         const NewtonOptions& options = {});

/// Sufficient condition for finite-time quenching of the data (u, v): some node
/// with u_i < (mu/N)^{1/q} and v_i < (lambda/M)^{1/p}, M = max(1, |u|), N = max(1, |v|).
std::optional<std::size_t> quench_certificate(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                              const NonlocalOperator& op, const SystemParams& params);

enum class PointClass { Global, AllQuench, Unresolved };

std::string to_string(PointClass c);
PointClass point_class_from_string(const std::string& name);

class Unresolved : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ClassifyOptions {
    // Stop as soon as the quench certificate holds instead of running to the
    // quench time. T_est is then absent.
    bool stop_on_certificate = false;
    double escalation = 4.0;
};

struct PointClassification {
    PointClass cls = PointClass::Unresolved;
    std::optional<double> T_est;
    bool certified = false;
    double t_end = 0.0;
    std::optional<Eigen::VectorXd> steady_u;
    std::optional<Eigen::VectorXd> steady_v;
};

/// Evolves u0 = v0 = 1: Steady means Global, Quenched means AllQuench. A timeout
/// is retried once with t_max scaled by the escalation factor; a second
/// timeout throws Unresolved.
PointClassification classify_parameter_point(const NonlocalOperator& op, const SystemParams& params,
                                             const SolverConfig& config,
                                             const ClassifyOptions& options = {});

struct RegionCell {
    double lambda = 0.0;
    double mu = 0.0;
    PointClass cls = PointClass::Unresolved;
    std::optional<double> T_est;
};

struct BoundaryEstimate {
    double lambda = 0.0;
    double mu_star_lo = 0.0;
    double mu_star_hi = 0.0;
    bool resolved = true;
};

struct RegionMap {
    std::vector<double> lambdas;
    std::vector<double> mus;
    std::vector<RegionCell> cells; // lambda-major: cells[i * mus.size() + j]
    std::vector<BoundaryEstimate> boundary;

    const RegionCell& at(std::size_t i, std::size_t j) const { return cells[i * mus.size() + j]; }
};

struct RegionOptions {
    std::size_t resolution = 8;
    std::size_t bisect_steps = 6;
    ClassifyOptions classify{.stop_on_certificate = true};
};

/// Classification on the (lambda, mu) grid lo + (hi - lo) (k + 1) / resolution,
/// plus a bisection estimate of the Global/AllQuench switch along every
/// fixed-lambda column.
RegionMap map_region(const NonlocalOperator& op, double p, double q,
                     std::pair<double, double> lambda_range, std::pair<double, double> mu_range,
                     const SolverConfig& config, const RegionOptions& options = {});

/// Pairs (Global cell, cell with smaller or equal lambda and mu) that are not Global.
std::size_t staircase_violations(const RegionMap& map);

struct MonotonicityVerdict {
    bool ok = true;
    std::size_t comparisons = 0;
    double worst_violation = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> violations;
};

/// For all ordered parameter pairs (lambda_1 <= lambda_2, mu_1 <= mu_2):
/// w_1 >= w_2 and z_1 >= z_2 component-wise up to slack.
MonotonicityVerdict check_stationary_monotonicity(
    const std::vector<std::pair<SystemParams, StationaryPair>>& pairs, double slack = 1e-10);

} // namespace quenchlab
