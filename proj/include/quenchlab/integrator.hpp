#pragma once

#include <cstddef>
#include <functional>
#include <variant>
#include <vector>

#include "quenchlab/grid_kernel.hpp"
#include "quenchlab/model.hpp"

namespace quenchlab {

struct SolverConfig {
    double rtol = 1e-8;
    // Error weights are atol + rtol*|y|. The default keeps control relative all
    // the way down to the quench threshold.
    double atol = 1e-20;
    double dt_init = 1e-3;
    double dt_min = 1e-300;
    double dt_max = 1.0;
    double quench_threshold = 1e-6;
    double steady_tol = 1e-10;
    double t_max = 1000.0;
    std::size_t record_stride = 1;
    // After the first component crosses quench_threshold, integration goes on
    // until the other one crosses too or the first one falls below
    // quench_threshold * drain_ratio. A ratio of 1 stops at the first crossing.
    double drain_ratio = 1e-8;
    // Full snapshots every k accepted steps (0: initial and final state only).
    std::size_t snapshot_every = 0;
    std::size_t max_steps = 5'000'000;

    void validate() const;
    bool operator==(const SolverConfig&) const = default;
};

/// Elapsed time kept as an unevaluated sum hi + lo. Steps near a quenching
/// time are far below the resolution of a double at t = O(1).
class Clock {
public:
    Clock() = default;
    explicit Clock(double t) : hi_(t) {}

    void advance(double dt);
    double value() const { return hi_ + lo_; }
    double hi() const { return hi_; }
    double lo() const { return lo_; }
    // Smallest increment that still changes the clock reliably.
    double resolution() const;

private:
    double hi_ = 0.0;
    double lo_ = 0.0;
};

struct Sample {
    double t = 0.0;
    double elapsed = 0.0; // time since the previous sample (the step at stride 1)
    double min_u = 0.0;
    std::size_t argmin_u = 0;
    double min_v = 0.0;
    std::size_t argmin_v = 0;
    double psi_gap = 0.0;
};

struct Trajectory {
    std::vector<Sample> samples;
    std::vector<State> snapshots;

    /// T - t_k for every sample, given the correction T - t_final. Built from
    /// suffix sums of the elapsed increments so it stays accurate when T - t is
    /// far below the spacing of doubles near T.
    std::vector<double> time_to_go(double final_correction) const;
};

struct Quenched {
    double T_est = 0.0;
    bool u_quenched = false;
    bool v_quenched = false;
    double correction = 0.0; // T_est - t_final
};

struct Steady {
    double residual = 0.0;
};

struct TimedOut {};

// Stopped early by a caller-supplied predicate.
struct Interrupted {
    double t = 0.0;
};

using Outcome = std::variant<Quenched, Steady, TimedOut, Interrupted>;

struct IntegrationStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t positivity_rejections = 0;
    std::size_t event_bisections = 0;
};

struct IntegrationResult {
    Trajectory trajectory;
    Outcome outcome;
    State final_state;
    Clock clock;
    IntegrationStats stats;
};

// Checked after every accepted step; true ends the run as Interrupted.
using StopPredicate = std::function<bool(const Eigen::VectorXd& u, const Eigen::VectorXd& v)>;

IntegrationResult integrate(const State& state0, const NonlocalOperator& op,
                            const SystemParams& params, const SolverConfig& config,
                            const StopPredicate& stop = {});

struct TimeEstimate {
    double T = 0.0;
    double correction = 0.0;
    bool degenerate = false;
};

/// T = t_final + m / |m'|, with m the smaller final minimum and m' its rate
/// of change from the right-hand side at the final state.
TimeEstimate estimate_T(const Trajectory& trajectory, const State& state_final,
                        const SystemParams& params, const NonlocalOperator& op);

// Index of the smallest entry; ties go to the smallest index.
std::size_t argmin_index(const Eigen::VectorXd& values);

inline bool is_quenched(const Outcome& o) { return std::holds_alternative<Quenched>(o); }
inline bool is_steady(const Outcome& o) { return std::holds_alternative<Steady>(o); }

} // namespace quenchlab
