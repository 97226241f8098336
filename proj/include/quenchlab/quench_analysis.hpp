#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quenchlab/integrator.hpp"

namespace quenchlab {

enum class Regime {
    Simultaneous,
    NonSimultaneousU, // only u quenches, v bounded below
    NonSimultaneousV, // only v quenches, u bounded below
    Either,           // p, q < 1: decided by the initial data
    Global,           // no quenching observed (steady or timed out)
    Indeterminate,    // quenched, but floors do not separate cleanly
};

std::string to_string(Regime regime);
Regime regime_from_string(const std::string& name);

enum class Component { U, V };

/// Theoretical behaviour of a component's minimum near T:
/// min ~ (T - t)^power * |log(T - t)|^log_power, unless bounded.
struct RateLaw {
    bool bounded = false;
    double power = 0.0;
    double log_power = 0.0;

    bool has_log_factor() const { return !bounded && log_power != 0.0; }
};

Regime predict_regime(const SystemParams& params);
std::pair<RateLaw, RateLaw> theoretical_rates(const SystemParams& params);

class InsufficientWindow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotApplicable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RateWindow {
    double m_lo = 1e-5;
    double m_hi = 1e-2;

    bool operator==(const RateWindow&) const = default;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_norm = 0.0;
    std::size_t count = 0;
};

inline constexpr std::size_t kMinFitSamples = 20;

/// Least-squares slope of log(min) against log(T - t) over samples whose
/// minimum lies in the window. `correction` is T_est - t_final.
RateFit fit_rate(const Trajectory& trajectory, double correction, Component component,
                 RateWindow window = {});

/// Same, against log|log(T - t)|; used for the pure-log components.
RateFit fit_log_rate(const Trajectory& trajectory, double correction, Component component,
                     RateWindow window = {});

/// Least-squares line through (x, y); shared by both fits.
RateFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y);

/// Clusters of argmin abscissae over the final decade (min <= 10 eps_q) of
/// every component that reached eps_q, merged when closer than cluster_radius.
/// Each cluster is reported by its median node abscissa.
std::vector<double> detect_quench_set(const Trajectory& trajectory, const Grid& grid,
                                      double cluster_radius, double quench_threshold);

struct ComponentRelation {
    std::vector<double> ratio;
    double spread = 0.0; // max/min of the ratio series
    bool bounded = false;
};

// Factor band for the "bounded" verdict: every ratio within [1/50, 50] of the
// first ratio in the window. Diagnostic constant.
inline constexpr double kRelationBand = 50.0;

/// Ratio u^{1-q}/v^{1-p} (log forms when p or q equals 1) over samples where
/// both minima are within the final decade window_hi. Throws NotApplicable
/// unless both components quenched.
ComponentRelation check_component_relation(const Trajectory& trajectory, const SystemParams& params,
                                           double quench_threshold, double window_hi = 1e-2);

/// Regime implied by the recorded floors of a finished run.
Regime observed_regime(const Outcome& outcome, double floor_u, double floor_v,
                       double quench_threshold);

/// gap(t=0) + 8 M N (T + 1)
double psi_gap_bound(double gap0, const AprioriBounds& bounds, double T);

struct QuenchReport {
    Outcome outcome;
    Regime regime_predicted = Regime::Either;
    Regime regime_observed = Regime::Indeterminate;
    double T_est = 0.0;
    double T_correction = 0.0;
    std::optional<RateFit> fit_u;
    std::optional<RateFit> fit_v;
    std::optional<double> alpha_u;
    std::optional<double> alpha_v;
    // Refits with T_est shifted by -correction and +correction.
    std::optional<std::pair<double, double>> alpha_u_sensitivity;
    std::optional<std::pair<double, double>> alpha_v_sensitivity;
    bool log_correction_u = false;
    bool log_correction_v = false;
    // Slope against log|log(T - t)| for components whose law is a pure log.
    std::optional<RateFit> log_fit_u;
    std::optional<RateFit> log_fit_v;
    RateLaw law_u;
    RateLaw law_v;
    std::vector<double> quench_set;
    double psi_gap_initial = 0.0;
    double psi_gap_max = 0.0;
    double psi_gap_bound = 0.0;
    double floor_u = 0.0;
    double floor_v = 0.0;
    std::optional<ComponentRelation> relation;
    bool argmin_coincide = false;
};

struct AnalysisOptions {
    RateWindow window;
    double cluster_radius = 0.0; // 0: one grid cell
};

QuenchReport analyze(const IntegrationResult& result, const Grid& grid, const SystemParams& params,
                     const SolverConfig& config, const AnalysisOptions& options = {});

} // namespace quenchlab
