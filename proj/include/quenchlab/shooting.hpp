#pragma once

#include <stdexcept>
#include <vector>

#include "quenchlab/quench_analysis.hpp"

namespace quenchlab {

struct ShootingConfig {
    SystemParams params;
    Eigen::VectorXd u0_base;
    Eigen::VectorXd v0_base;
    std::size_t delta_samples = 33;
    std::size_t bisect_steps = 20;

    /// p, q < 1, positive bases with max u0 <= min{1, (mu/2)^{1/q}} and
    /// max v0 <= min{1, (lambda/2)^{1/p}}.
    void validate() const;
};

/// Solver defaults for shooting runs. The simultaneous band around the
/// symmetric point shrinks with the threshold, so it is set far below the
/// usual 1e-6.
SolverConfig shooting_solver_defaults();

struct ShootingRecord {
    double delta = 0.0;
    Regime regime = Regime::Indeterminate;
    double T_delta = 0.0;
    double floor_u = 0.0;
    double floor_v = 0.0;
    // Largest u_t and v_t over the nodes at t = 0.
    double initial_du_max = 0.0;
    double initial_dv_max = 0.0;
    bool quenched = false;
};

struct ShootingResult {
    std::vector<ShootingRecord> sweep;
    std::vector<ShootingRecord> probes; // new bisection runs in evaluation order
    double delta_minus = 0.0;           // NonSimultaneousU side
    double delta_plus = 0.0;            // NonSimultaneousV side
    double initial_width = 0.0;

    double width() const { return delta_plus - delta_minus; }
};

class SweepTooCoarse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Single run from (delta u0_base, (1 - delta) v0_base).
ShootingRecord shoot_once(const ShootingConfig& config, const NonlocalOperator& op,
                          const SolverConfig& solver, double delta);

/// delta_k = (k + 1) / (samples + 1), k = 0 .. samples - 1.
std::vector<ShootingRecord> sweep_delta(const ShootingConfig& config, const NonlocalOperator& op,
                                        const SolverConfig& solver, std::size_t samples);

/// Sweep, then bisection between the largest NonSimultaneousU sample and the
/// next NonSimultaneousV sample. A Simultaneous midpoint is followed by probes
/// at the two quarter points; an endpoint moves only onto a probe of its own
/// regime.
ShootingResult run_shooting(const ShootingConfig& config, const NonlocalOperator& op,
                            const SolverConfig& solver);

/// min{min_i delta u0_i, min_i (1 - delta) v0_i}
double Tdelta_bound(const ShootingConfig& config, double delta);

struct TdeltaContinuity {
    double max_jump_coarse = 0.0;
    double max_jump_fine = 0.0;
    double spacing_coarse = 0.0;
    double spacing_fine = 0.0;
    bool consistent = false;
};

double max_adjacent_jump(const std::vector<ShootingRecord>& records);

/// Both sweeps need at least 10 samples; consistent when the maximal adjacent
/// jump of T_delta shrinks on the finer sweep.
TdeltaContinuity check_Tdelta_continuity(const std::vector<ShootingRecord>& coarse,
                                         const std::vector<ShootingRecord>& fine);

/// Adjacent sweep samples where floor_u decreases by more than slack.
std::size_t floor_u_decreases(const std::vector<ShootingRecord>& records, double slack = 1e-10);

} // namespace quenchlab
