#include "quenchlab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "quenchlab/errors.hpp"

namespace quenchlab {

void SolverConfig::validate() const {
    if (!(rtol > 0.0) || !(atol >= 0.0)) {
        throw ConfigError("solver: rtol must be positive and atol nonnegative");
    }
    if (!(dt_min > 0.0) || !(dt_min < dt_max) || !(dt_init > 0.0)) {
        throw ConfigError("solver: require 0 < dt_min < dt_max and dt_init > 0");
    }
    if (!(quench_threshold > 0.0) || !(steady_tol > 0.0) || !(t_max > 0.0)) {
        throw ConfigError("solver: quench_threshold, steady_tol and t_max must be positive");
    }
    if (!(drain_ratio > 0.0) || drain_ratio > 1.0) {
        throw ConfigError("solver: drain_ratio must lie in (0, 1]");
    }
    if (record_stride == 0) {
        throw ConfigError("solver: record_stride must be at least 1");
    }
}

void Clock::advance(double dt) {
    // TwoSum followed by renormalisation.
    const double s = hi_ + dt;
    const double bp = s - hi_;
    const double err = (hi_ - (s - bp)) + (dt - bp);
    const double lo = lo_ + err;
    hi_ = s + lo;
    lo_ = lo - (hi_ - s);
}

double Clock::resolution() const {
    return std::max(std::ldexp(std::abs(hi_), -100), std::numeric_limits<double>::min());
}

std::vector<double> Trajectory::time_to_go(double final_correction) const {
    std::vector<double> out(samples.size());
    long double acc = final_correction;
    for (std::size_t k = samples.size(); k-- > 0;) {
        out[k] = static_cast<double>(acc);
        acc += samples[k].elapsed;
    }
    return out;
}

std::size_t argmin_index(const Eigen::VectorXd& values) {
    std::size_t best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i) {
        if (values(i) < values(static_cast<Eigen::Index>(best))) {
            best = static_cast<std::size_t>(i);
        }
    }
    return best;
}

namespace {

// Six-stage, stiffly accurate Rosenbrock method of order 4 with an embedded
// order-3 solution (Hairer & Wanner coefficient set, as used by Shampine's
// ROS4 family). The system is autonomous, so no time-derivative terms appear.
struct RosenbrockTableau {
    static constexpr double gamma = 0.25;
    static constexpr double a21 = 0.1544000000000000e+01;
    static constexpr double a31 = 0.9466785280815826e+00;
    static constexpr double a32 = 0.2557011698983284e+00;
    static constexpr double a41 = 0.3314825187068521e+01;
    static constexpr double a42 = 0.2896124015972201e+01;
    static constexpr double a43 = 0.9986419139977817e+00;
    static constexpr double a51 = 0.1221224509226641e+01;
    static constexpr double a52 = 0.6019134481288629e+01;
    static constexpr double a53 = 0.1253708332932087e+02;
    static constexpr double a54 = -0.6878860361058950e+00;
    static constexpr double c21 = -0.5668800000000000e+01;
    static constexpr double c31 = -0.2430093356833875e+01;
    static constexpr double c32 = -0.2063599157091915e+00;
    static constexpr double c41 = -0.1073529058151375e+00;
    static constexpr double c42 = -0.9594562251023355e+01;
    static constexpr double c43 = -0.2047028614809616e+02;
    static constexpr double c51 = 0.7496443313967647e+01;
    static constexpr double c52 = -0.1024680431464352e+02;
    static constexpr double c53 = -0.3399990352819905e+02;
    static constexpr double c54 = 0.1170890893206160e+02;
    static constexpr double c61 = 0.8083246795921522e+01;
    static constexpr double c62 = -0.7981132988064893e+01;
    static constexpr double c63 = -0.3152159432874371e+02;
    static constexpr double c64 = 0.1631930543123136e+02;
    static constexpr double c65 = -0.6058818238834054e+01;
};

class RosenbrockStepper {
public:
    RosenbrockStepper(const NonlocalOperator& op, const SystemParams& params)
        : op_(op), params_(params) {}

    enum class Status { Ok, NonPositive };

    // One step of size h from y with f = f(y) and jac = J(y). On success,
    // y_new holds the order-4 solution and err the embedded error estimate.
    Status step(const Eigen::VectorXd& y, const Eigen::VectorXd& f, const Eigen::MatrixXd& jac,
                double h, Eigen::VectorXd& y_new, Eigen::VectorXd& err) {
        using T = RosenbrockTableau;
        const Eigen::Index dim = y.size();
        m_ = -jac;
        m_.diagonal().array() += 1.0 / (T::gamma * h);
        lu_.compute(m_);

        g1_ = lu_.solve(f);

        stage_ = y + T::a21 * g1_;
        if (!eval(stage_)) return Status::NonPositive;
        g2_ = lu_.solve(fs_ + (T::c21 / h) * g1_);

        stage_ = y + T::a31 * g1_ + T::a32 * g2_;
        if (!eval(stage_)) return Status::NonPositive;
        g3_ = lu_.solve(fs_ + (T::c31 * g1_ + T::c32 * g2_) / h);

        stage_ = y + T::a41 * g1_ + T::a42 * g2_ + T::a43 * g3_;
        if (!eval(stage_)) return Status::NonPositive;
        g4_ = lu_.solve(fs_ + (T::c41 * g1_ + T::c42 * g2_ + T::c43 * g3_) / h);

        stage_ = y + T::a51 * g1_ + T::a52 * g2_ + T::a53 * g3_ + T::a54 * g4_;
        if (!eval(stage_)) return Status::NonPositive;
        g5_ = lu_.solve(fs_ + (T::c51 * g1_ + T::c52 * g2_ + T::c53 * g3_ + T::c54 * g4_) / h);

        stage_ += g5_;
        if (!eval(stage_)) return Status::NonPositive;
        err = lu_.solve(fs_ + (T::c61 * g1_ + T::c62 * g2_ + T::c63 * g3_ + T::c64 * g4_ +
                               T::c65 * g5_) / h);
        y_new = stage_ + err;
        if (y_new.size() != dim || !(y_new.array() > 0.0).all() || !y_new.allFinite()) {
            return Status::NonPositive;
        }
        return Status::Ok;
    }

private:
    bool eval(const Eigen::VectorXd& ys) {
        if (!(ys.array() > 0.0).all()) {
            return false;
        }
        try {
            rhs_stacked(ys, op_, params_, fs_);
        } catch (const NumericalOverflow&) {
            return false;
        }
        return fs_.allFinite();
    }

    const NonlocalOperator& op_;
    const SystemParams& params_;
    Eigen::MatrixXd m_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    Eigen::VectorXd g1_, g2_, g3_, g4_, g5_, stage_, fs_;
};

struct Minima {
    double u;
    std::size_t iu;
    double v;
    std::size_t iv;
};

Minima minima_of(const Eigen::VectorXd& y, Eigen::Index n) {
    Minima m{};
    m.iu = argmin_index(y.head(n));
    m.iv = argmin_index(y.tail(n));
    m.u = y(static_cast<Eigen::Index>(m.iu));
    m.v = y(n + static_cast<Eigen::Index>(m.iv));
    return m;
}

} // namespace

IntegrationResult integrate(const State& state0, const NonlocalOperator& op,
                            const SystemParams& params, const SolverConfig& config,
                            const StopPredicate& stop) {
    params.validate();
    config.validate();
    const auto n = static_cast<Eigen::Index>(op.size());
    if (state0.u.size() != n || state0.v.size() != n) {
        throw ConfigError("integrate: initial state size does not match the grid");
    }
    if (!state0.positive()) {
        throw ConfigError("integrate: initial data must be strictly positive");
    }

    IntegrationResult result;
    result.clock = Clock(state0.t);
    Clock& clock = result.clock;
    Trajectory& traj = result.trajectory;
    IntegrationStats& stats = result.stats;

    Eigen::VectorXd y(2 * n);
    y << state0.u, state0.v;
    Eigen::VectorXd f;
    Eigen::VectorXd y_new;
    Eigen::VectorXd err;
    Eigen::MatrixXd jac;
    rhs_stacked(y, op, params, f);

    RosenbrockStepper stepper(op, params);
    const double eps_q = config.quench_threshold;

    auto to_state = [&](double t) {
        return State{t, y.head(n), y.tail(n)};
    };
    long double pending_elapsed = 0.0L;
    auto record = [&]() {
        const Minima m = minima_of(y, n);
        Sample s;
        s.t = clock.value();
        s.elapsed = static_cast<double>(pending_elapsed);
        s.min_u = m.u;
        s.argmin_u = m.iu;
        s.min_v = m.v;
        s.argmin_v = m.iv;
        s.psi_gap = psi_gap(y.head(n), y.tail(n), params);
        traj.samples.push_back(s);
        pending_elapsed = 0.0L;
    };

    record();
    traj.snapshots.push_back(to_state(clock.value()));

    bool crossed_u = false;
    bool crossed_v = false;
    double h = config.dt_init;
    bool last_rejected = false;
    std::size_t since_record = 0;
    std::optional<Outcome> outcome;

    while (!outcome) {
        const double residual = f.lpNorm<Eigen::Infinity>();
        if (residual < config.steady_tol) {
            outcome = Steady{residual};
            break;
        }
        if (clock.value() >= config.t_max) {
            outcome = TimedOut{};
            break;
        }
        if (stats.accepted >= config.max_steps) {
            throw NumericalFailure("integrate: step budget exhausted at t=" +
                                   std::to_string(clock.value()));
        }

        jacobian_stacked(y, op, params, jac);
        double err_norm = 0.0;
        bool accepted = false;
        while (!accepted) {
            h = std::min({h, config.dt_max, config.t_max - clock.value()});
            const double floor = std::max(config.dt_min, clock.resolution());
            if (h < floor) {
                break;
            }
            const auto status = stepper.step(y, f, jac, h, y_new, err);
            if (status == RosenbrockStepper::Status::NonPositive) {
                ++stats.positivity_rejections;
                h *= 0.5;
                last_rejected = true;
                continue;
            }
            err_norm = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double scale =
                    config.atol + config.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
                err_norm = std::max(err_norm, std::abs(err(i)) / scale);
            }
            if (!(err_norm <= 1.0)) {
                ++stats.rejected;
                h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.25));
                last_rejected = true;
                continue;
            }
            // Land the first crossing of each component in [eps_q/2, eps_q].
            const Minima m = minima_of(y_new, n);
            if ((!crossed_u && m.u < 0.5 * eps_q) || (!crossed_v && m.v < 0.5 * eps_q)) {
                ++stats.event_bisections;
                h *= 0.5;
                last_rejected = true;
                continue;
            }
            accepted = true;
        }

        if (!accepted) {
            // Step size fell below dt_min or the clock resolution.
            if (crossed_u || crossed_v) {
                break;
            }
            // Whichever minimum is smaller (both on a tie) must still be falling.
            const Minima m = minima_of(y, n);
            const bool u_falling = m.u <= m.v && f(static_cast<Eigen::Index>(m.iu)) < 0.0;
            const bool v_falling = m.v <= m.u && f(n + static_cast<Eigen::Index>(m.iv)) < 0.0;
            if (u_falling || v_falling) {
                crossed_u = u_falling;
                crossed_v = v_falling;
                break;
            }
            throw NumericalFailure("integrate: step size underflow at t=" +
                                   std::to_string(clock.value()) + " with non-decreasing minimum");
        }

        ++stats.accepted;
        clock.advance(h);
        pending_elapsed += h;
        y.swap(y_new);
        try {
            rhs_stacked(y, op, params, f);
        } catch (const NumericalOverflow& e) {
            throw NumericalFailure(std::string("integrate: ") + e.what());
        }

        const Minima m = minima_of(y, n);
        crossed_u = crossed_u || m.u <= eps_q;
        crossed_v = crossed_v || m.v <= eps_q;

        bool done = false;
        if (crossed_u && crossed_v) {
            done = true;
        } else if (crossed_u || crossed_v) {
            const double first = crossed_u ? m.u : m.v;
            done = config.drain_ratio >= 1.0 || first <= eps_q * config.drain_ratio;
        }

        ++since_record;
        if (done || since_record >= config.record_stride) {
            record();
            since_record = 0;
        }
        if (config.snapshot_every > 0 && stats.accepted % config.snapshot_every == 0 && !done) {
            traj.snapshots.push_back(to_state(clock.value()));
        }
        if (done) {
            break;
        }
        if (stop && stop(y.head(n), y.tail(n))) {
            outcome = Interrupted{clock.value()};
            break;
        }

        double factor = 0.9 * std::pow(std::max(err_norm, 1e-10), -0.25);
        factor = std::clamp(factor, 0.2, last_rejected ? 1.0 : 5.0);
        h *= factor;
        last_rejected = false;
    }

    if (pending_elapsed > 0.0L) {
        record();
    }
    result.final_state = to_state(clock.value());
    traj.snapshots.push_back(result.final_state);

    if (!outcome) {
        const Minima m = minima_of(y, n);
        Quenched q;
        q.u_quenched = crossed_u || m.u <= eps_q;
        q.v_quenched = crossed_v || m.v <= eps_q;
        const TimeEstimate est = estimate_T(traj, result.final_state, params, op);
        q.T_est = est.T;
        q.correction = est.correction;
        outcome = q;
    }
    result.outcome = *outcome;
    return result;
}

TimeEstimate estimate_T(const Trajectory& trajectory, const State& state_final,
                        const SystemParams& params, const NonlocalOperator& op) {
    const double t_final = trajectory.samples.empty() ? state_final.t : trajectory.samples.back().t;
    const Derivative d = rhs(state_final, op, params);
    const std::size_t iu = argmin_index(state_final.u);
    const std::size_t iv = argmin_index(state_final.v);
    const double mu_min = state_final.u(static_cast<Eigen::Index>(iu));
    const double mv_min = state_final.v(static_cast<Eigen::Index>(iv));
    const bool use_u = mu_min <= mv_min;
    const double m = use_u ? mu_min : mv_min;
    const double slope = use_u ? d.du(static_cast<Eigen::Index>(iu)) : d.dv(static_cast<Eigen::Index>(iv));
    TimeEstimate est;
    if (std::abs(slope) < 1e-14) {
        est.T = t_final;
        est.degenerate = true;
        return est;
    }
    est.correction = m / std::abs(slope);
    est.T = t_final + est.correction;
    return est;
}

} // namespace quenchlab
