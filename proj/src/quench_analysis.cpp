#include "quenchlab/quench_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>

#include "quenchlab/errors.hpp"

namespace quenchlab {

std::string to_string(Regime regime) {
    switch (regime) {
    case Regime::Simultaneous:
        return "Simultaneous";
    case Regime::NonSimultaneousU:
        return "NonSimultaneousU";
    case Regime::NonSimultaneousV:
        return "NonSimultaneousV";
    case Regime::Either:
        return "Either";
    case Regime::Global:
        return "Global";
    case Regime::Indeterminate:
        return "Indeterminate";
    }
    return "Indeterminate";
}

Regime regime_from_string(const std::string& name) {
    for (Regime r : {Regime::Simultaneous, Regime::NonSimultaneousU, Regime::NonSimultaneousV,
                     Regime::Either, Regime::Global, Regime::Indeterminate}) {
        if (to_string(r) == name) {
            return r;
        }
    }
    throw ConfigError("unknown regime '" + name + "'");
}

Regime predict_regime(const SystemParams& params) {
    const bool p_ge = params.p >= 1.0;
    const bool q_ge = params.q >= 1.0;
    if (p_ge && q_ge) {
        return Regime::Simultaneous;
    }
    if (p_ge) {
        return Regime::NonSimultaneousU;
    }
    if (q_ge) {
        return Regime::NonSimultaneousV;
    }
    return Regime::Either;
}

std::pair<RateLaw, RateLaw> theoretical_rates(const SystemParams& params) {
    const double p = params.p;
    const double q = params.q;
    const double pq1 = p * q - 1.0;
    RateLaw u;
    RateLaw v;
    switch (predict_regime(params)) {
    case Regime::Simultaneous:
        if (p > 1.0 && q > 1.0) {
            u.power = (p - 1.0) / pq1;
            v.power = (q - 1.0) / pq1;
        } else if (p > 1.0) { // q == 1
            u.power = 1.0;
            u.log_power = -p / (1.0 - p);
            v.log_power = 1.0 / (1.0 - p);
        } else if (q > 1.0) { // p == 1
            u.log_power = 1.0 / (1.0 - q);
            v.power = 1.0;
            v.log_power = -q / (1.0 - q);
        } else {
            u.power = params.lambda / (params.lambda + params.mu);
            v.power = params.mu / (params.lambda + params.mu);
        }
        break;
    case Regime::NonSimultaneousU:
        u.power = 1.0;
        v.bounded = true;
        break;
    case Regime::NonSimultaneousV:
        u.bounded = true;
        v.power = 1.0;
        break;
    default:
        // p, q < 1 with simultaneous quenching at a common minimum point.
        u.power = (p - 1.0) / pq1;
        v.power = (q - 1.0) / pq1;
        break;
    }
    return {u, v};
}

RateFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
    RateFit fit;
    fit.count = x.size();
    if (x.size() < 2) {
        return fit;
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = y[k] - (fit.intercept + fit.slope * x[k]);
        ss += r * r;
    }
    fit.residual_norm = std::sqrt(ss / n);
    return fit;
}

namespace {

double min_of(const Sample& s, Component c) { return c == Component::U ? s.min_u : s.min_v; }

template <class Abscissa>
RateFit fit_against(const Trajectory& trajectory, double correction, Component component,
                    RateWindow window, Abscissa abscissa) {
    const std::vector<double> s = trajectory.time_to_go(correction);
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
        const double m = min_of(trajectory.samples[k], component);
        if (m < window.m_lo || m > window.m_hi || !(s[k] > 0.0)) {
            continue;
        }
        const std::optional<double> x = abscissa(s[k]);
        if (!x) {
            continue;
        }
        xs.push_back(*x);
        ys.push_back(std::log(m));
    }
    if (xs.size() < kMinFitSamples) {
        throw InsufficientWindow("rate fit: only " + std::to_string(xs.size()) +
                                 " samples inside the window");
    }
    return least_squares_line(xs, ys);
}

} // namespace

RateFit fit_rate(const Trajectory& trajectory, double correction, Component component,
                 RateWindow window) {
    return fit_against(trajectory, correction, component, window,
                       [](double s) -> std::optional<double> { return std::log(s); });
}

RateFit fit_log_rate(const Trajectory& trajectory, double correction, Component component,
                     RateWindow window) {
    return fit_against(trajectory, correction, component, window,
                       [](double s) -> std::optional<double> {
                           if (!(s < 1.0)) {
                               return std::nullopt;
                           }
                           return std::log(std::abs(std::log(s)));
                       });
}

std::vector<double> detect_quench_set(const Trajectory& trajectory, const Grid& grid,
                                      double cluster_radius, double quench_threshold) {
    std::vector<double> xs;
    for (Component c : {Component::U, Component::V}) {
        double floor = std::numeric_limits<double>::infinity();
        for (const Sample& s : trajectory.samples) {
            floor = std::min(floor, min_of(s, c));
        }
        if (floor > quench_threshold) {
            continue;
        }
        for (const Sample& s : trajectory.samples) {
            if (min_of(s, c) <= 10.0 * quench_threshold) {
                xs.push_back(grid[c == Component::U ? s.argmin_u : s.argmin_v]);
            }
        }
    }
    std::sort(xs.begin(), xs.end());
    std::vector<double> set;
    std::size_t start = 0;
    for (std::size_t k = 1; k <= xs.size(); ++k) {
        if (k == xs.size() || xs[k] - xs[k - 1] > cluster_radius) {
            if (k > start) {
                set.push_back(xs[start + (k - 1 - start) / 2]);
            }
            start = k;
        }
    }
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
}

ComponentRelation check_component_relation(const Trajectory& trajectory, const SystemParams& params,
                                           double quench_threshold, double window_hi) {
    double floor_u = std::numeric_limits<double>::infinity();
    double floor_v = std::numeric_limits<double>::infinity();
    for (const Sample& s : trajectory.samples) {
        floor_u = std::min(floor_u, s.min_u);
        floor_v = std::min(floor_v, s.min_v);
    }
    if (floor_u > quench_threshold || floor_v > quench_threshold) {
        throw NotApplicable("component relation: quenching is not simultaneous");
    }
    const double p = params.p;
    const double q = params.q;
    const bool both_ge = p >= 1.0 && q >= 1.0;
    const bool both_lt = p < 1.0 && q < 1.0;
    if (!both_ge && !both_lt) {
        throw NotApplicable("component relation: mixed exponents quench non-simultaneously");
    }
    auto ratio = [&](double u, double v) {
        if (p == 1.0 && q == 1.0) {
            return std::pow(u, params.mu) / std::pow(v, params.lambda);
        }
        if (q == 1.0) {
            return -std::log(u) / std::pow(v, 1.0 - p);
        }
        if (p == 1.0) {
            return std::pow(u, 1.0 - q) / -std::log(v);
        }
        return std::pow(u, 1.0 - q) / std::pow(v, 1.0 - p);
    };
    ComponentRelation rel;
    for (const Sample& s : trajectory.samples) {
        if (s.min_u <= window_hi && s.min_v <= window_hi) {
            rel.ratio.push_back(ratio(s.min_u, s.min_v));
        }
    }
    if (rel.ratio.size() < 2) {
        throw NotApplicable("component relation: fewer than two samples in the window");
    }
    const auto [lo, hi] = std::minmax_element(rel.ratio.begin(), rel.ratio.end());
    rel.spread = *hi / *lo;
    const double ref = rel.ratio.front();
    rel.bounded = std::all_of(rel.ratio.begin(), rel.ratio.end(), [&](double r) {
        return std::isfinite(r) && r / ref <= kRelationBand && r / ref >= 1.0 / kRelationBand;
    });
    return rel;
}

Regime observed_regime(const Outcome& outcome, double floor_u, double floor_v,
                       double quench_threshold) {
    if (!is_quenched(outcome)) {
        return Regime::Global;
    }
    const bool u_low = floor_u <= quench_threshold;
    const bool v_low = floor_v <= quench_threshold;
    if (u_low && v_low) {
        return Regime::Simultaneous;
    }
    if (u_low && floor_v >= 10.0 * quench_threshold) {
        return Regime::NonSimultaneousU;
    }
    if (v_low && floor_u >= 10.0 * quench_threshold) {
        return Regime::NonSimultaneousV;
    }
    return Regime::Indeterminate;
}

double psi_gap_bound(double gap0, const AprioriBounds& bounds, double T) {
    return gap0 + 8.0 * bounds.M_u * bounds.N_v * (T + 1.0);
}

QuenchReport analyze(const IntegrationResult& result, const Grid& grid, const SystemParams& params,
                     const SolverConfig& config, const AnalysisOptions& options) {
    QuenchReport rep;
    rep.outcome = result.outcome;
    rep.regime_predicted = predict_regime(params);
    const Trajectory& traj = result.trajectory;
    const double eps = config.quench_threshold;

    rep.floor_u = std::numeric_limits<double>::infinity();
    rep.floor_v = std::numeric_limits<double>::infinity();
    rep.psi_gap_max = 0.0;
    for (const Sample& s : traj.samples) {
        rep.floor_u = std::min(rep.floor_u, s.min_u);
        rep.floor_v = std::min(rep.floor_v, s.min_v);
        rep.psi_gap_max = std::max(rep.psi_gap_max, s.psi_gap);
    }
    rep.psi_gap_initial = traj.samples.empty() ? 0.0 : traj.samples.front().psi_gap;
    rep.regime_observed = observed_regime(result.outcome, rep.floor_u, rep.floor_v, eps);
    std::tie(rep.law_u, rep.law_v) = theoretical_rates(params);
    rep.log_correction_u = rep.law_u.has_log_factor();
    rep.log_correction_v = rep.law_v.has_log_factor();

    const auto* quenched = std::get_if<Quenched>(&result.outcome);
    if (quenched == nullptr) {
        rep.T_est = result.clock.value();
        return rep;
    }
    rep.T_est = quenched->T_est;
    rep.T_correction = quenched->correction;

    const State& initial = traj.snapshots.front();
    rep.psi_gap_bound = psi_gap_bound(rep.psi_gap_initial, apriori_bounds(initial.u, initial.v), rep.T_est);

    auto fit_component = [&](Component c, std::optional<RateFit>& fit, std::optional<double>& alpha,
                             std::optional<std::pair<double, double>>& sens) {
        try {
            fit = fit_rate(traj, rep.T_correction, c, options.window);
            alpha = fit->slope;
            const double lo = fit_rate(traj, 0.0, c, options.window).slope;
            const double hi = fit_rate(traj, 2.0 * rep.T_correction, c, options.window).slope;
            sens = std::make_pair(lo, hi);
        } catch (const InsufficientWindow&) {
        }
    };
    if (rep.floor_u <= eps) {
        fit_component(Component::U, rep.fit_u, rep.alpha_u, rep.alpha_u_sensitivity);
    }
    if (rep.floor_v <= eps) {
        fit_component(Component::V, rep.fit_v, rep.alpha_v, rep.alpha_v_sensitivity);
    }
    auto fit_log = [&](Component c, const RateLaw& law, double floor, std::optional<RateFit>& fit) {
        if (floor > eps || law.power != 0.0 || !law.has_log_factor()) return;
        try {
            fit = fit_log_rate(traj, rep.T_correction, c, options.window);
        } catch (const InsufficientWindow&) {
        }
    };
    fit_log(Component::U, rep.law_u, rep.floor_u, rep.log_fit_u);
    fit_log(Component::V, rep.law_v, rep.floor_v, rep.log_fit_v);

    const double radius = options.cluster_radius > 0.0 ? options.cluster_radius : grid.h();
    rep.quench_set = detect_quench_set(traj, grid, radius, eps);

    bool coincide = true;
    bool any = false;
    for (const Sample& s : traj.samples) {
        if (s.min_u <= options.window.m_hi && s.min_v <= options.window.m_hi) {
            any = true;
            coincide = coincide && s.argmin_u == s.argmin_v;
        }
    }
    rep.argmin_coincide = any && coincide;

    if (rep.regime_observed == Regime::Simultaneous) {
        const bool both_lt = params.p < 1.0 && params.q < 1.0;
        if (!both_lt || rep.argmin_coincide) {
            try {
                rep.relation = check_component_relation(traj, params, eps, options.window.m_hi);
            } catch (const NotApplicable&) {
            }
        }
    }
    return rep;
}

} // namespace quenchlab
