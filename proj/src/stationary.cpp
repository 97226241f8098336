#include "quenchlab/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "quenchlab/errors.hpp"

namespace quenchlab {

namespace {

bool residual_of(const Eigen::VectorXd& y, const NonlocalOperator& op, const SystemParams& params,
                 Eigen::VectorXd& f) {
    if (!(y.array() > 0.0).all()) {
        return false;
    }
    try {
        rhs_stacked(y, op, params, f);
    } catch (const NumericalOverflow&) {
        return false;
    }
    return f.allFinite();
}

double root_or_zero(double c, double e) { return c > 0.0 ? std::pow(c, 1.0 / e) : 0.0; }

} // namespace

StationaryResult solve_stationary_newton(const NonlocalOperator& op, const SystemParams& params,
                                         const Eigen::VectorXd& w0, const Eigen::VectorXd& z0,
                                         const NewtonOptions& options) {
    params.validate(true);
    const auto n = static_cast<Eigen::Index>(op.size());
    if (w0.size() != n || z0.size() != n) {
        throw ConfigError("stationary: initial guess size does not match the grid");
    }
    if (!(w0.array() > 0.0).all() || !(z0.array() > 0.0).all()) {
        throw ConfigError("stationary: initial guess must be positive");
    }

    Eigen::VectorXd y(2 * n);
    y << w0, z0;
    Eigen::VectorXd f;
    Eigen::VectorXd f_trial;
    Eigen::VectorXd trial;
    Eigen::MatrixXd jac;
    if (!residual_of(y, op, params, f)) {
        return NoStationary{"residual not finite at the initial guess"};
    }

    std::size_t it = 0;
    double res = f.lpNorm<Eigen::Infinity>();
    while (res > options.tol) {
        if (it >= options.max_iterations) {
            return NoStationary{"no convergence after " + std::to_string(it) + " iterations"};
        }
        ++it;
        jacobian_stacked(y, op, params, jac);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        const Eigen::VectorXd delta = lu.solve(-f);
        if (!delta.allFinite()) {
            return NoStationary{"singular Newton matrix"};
        }
        const double norm0 = f.norm();
        double alpha = 1.0;
        bool ok = false;
        for (int k = 0; k < 50; ++k, alpha *= 0.5) {
            trial = y + alpha * delta;
            if (residual_of(trial, op, params, f_trial) &&
                f_trial.norm() <= (1.0 - 1e-4 * alpha) * norm0) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            return NoStationary{"line search failed (iterate leaves positivity or stalls)"};
        }
        y.swap(trial);
        f.swap(f_trial);
        res = f.lpNorm<Eigen::Infinity>();
    }

    StationaryPair pair;
    pair.w = y.head(n);
    pair.z = y.tail(n);
    pair.residual = res;
    pair.iterations = it;
    pair.lower_margin_w = pair.w.minCoeff() - root_or_zero(params.mu, params.q);
    pair.lower_margin_z = pair.z.minCoeff() - root_or_zero(params.lambda, params.p);
    pair.upper_margin = 1.0 - std::max(pair.w.maxCoeff(), pair.z.maxCoeff());
    if (!(pair.lower_margin_w > 0.0) || !(pair.lower_margin_z > 0.0)) {
        return NoStationary{"converged iterate violates the lower bounds"};
    }
    if (pair.upper_margin < -options.upper_slack) {
        return NoStationary{"converged iterate exceeds 1"};
    }
    return pair;
}

std::optional<std::size_t> quench_certificate(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                              const NonlocalOperator& op, const SystemParams& params) {
    if (!(params.lambda > 0.0) || !(params.mu > 0.0)) {
        return std::nullopt;
    }
    const double M = std::max(1.0, u.maxCoeff());
    const double N = std::max(1.0, v.maxCoeff());
    // Constants above 1 are only supersolutions when every b_i >= 0.
    if ((M > 1.0 || N > 1.0) && op.exterior.minCoeff() < 0.0) {
        return std::nullopt;
    }
    const double u_cap = std::pow(params.mu / N, 1.0 / params.q);
    const double v_cap = std::pow(params.lambda / M, 1.0 / params.p);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u(i) < u_cap && v(i) < v_cap) {
            return static_cast<std::size_t>(i);
        }
    }
    return std::nullopt;
}

std::string to_string(PointClass c) {
    switch (c) {
    case PointClass::Global:
        return "Global";
    case PointClass::AllQuench:
        return "AllQuench";
    case PointClass::Unresolved:
        return "Unresolved";
    }
    return "Unresolved";
}

PointClass point_class_from_string(const std::string& name) {
    if (name == "Global") return PointClass::Global;
    if (name == "AllQuench") return PointClass::AllQuench;
    if (name == "Unresolved") return PointClass::Unresolved;
    throw ConfigError("unknown point class '" + name + "'");
}

PointClassification classify_parameter_point(const NonlocalOperator& op, const SystemParams& params,
                                             const SolverConfig& config,
                                             const ClassifyOptions& options) {
    params.validate();
    if (!(options.escalation >= 1.0)) {
        throw ConfigError("classify: escalation factor must be at least 1");
    }
    StopPredicate stop;
    if (options.stop_on_certificate) {
        stop = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
            return quench_certificate(u, v, op, params).has_value();
        };
    }

    State state = State::constant(op.size(), 1.0, 1.0);
    SolverConfig cfg = config;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const IntegrationResult run = integrate(state, op, params, cfg, stop);
        PointClassification out;
        out.t_end = run.clock.value();
        if (const auto* q = std::get_if<Quenched>(&run.outcome)) {
            out.cls = PointClass::AllQuench;
            out.T_est = q->T_est;
            return out;
        }
        if (std::holds_alternative<Interrupted>(run.outcome)) {
            out.cls = PointClass::AllQuench;
            out.certified = true;
            return out;
        }
        if (std::holds_alternative<Steady>(run.outcome)) {
            out.cls = PointClass::Global;
            out.steady_u = run.final_state.u;
            out.steady_v = run.final_state.v;
            return out;
        }
        state = run.final_state;
        cfg.t_max = config.t_max * options.escalation;
    }
    throw Unresolved("classify: no steady state or quenching by t=" + std::to_string(cfg.t_max) +
                     " for lambda=" + std::to_string(params.lambda) +
                     ", mu=" + std::to_string(params.mu));
}

namespace {

std::vector<double> axis(std::pair<double, double> range, std::size_t res) {
    std::vector<double> out(res);
    for (std::size_t k = 0; k < res; ++k) {
        out[k] = range.first + (range.second - range.first) * static_cast<double>(k + 1) /
                                   static_cast<double>(res);
    }
    return out;
}

PointClass classify_or_mark(const NonlocalOperator& op, const SystemParams& params,
                            const SolverConfig& config, const ClassifyOptions& options,
                            std::optional<double>* T_est) {
    try {
        const PointClassification c = classify_parameter_point(op, params, config, options);
        if (T_est) *T_est = c.T_est;
        return c.cls;
    } catch (const Unresolved&) {
        return PointClass::Unresolved;
    } catch (const NumericalFailure&) {
        return PointClass::Unresolved;
    }
}

} // namespace

RegionMap map_region(const NonlocalOperator& op, double p, double q,
                     std::pair<double, double> lambda_range, std::pair<double, double> mu_range,
                     const SolverConfig& config, const RegionOptions& options) {
    if (!(lambda_range.first >= 0.0) || !(lambda_range.second > lambda_range.first) ||
        !(mu_range.first >= 0.0) || !(mu_range.second > mu_range.first)) {
        throw ConfigError("region: ranges must be positive intervals (lo, hi]");
    }
    if (options.resolution == 0) {
        throw ConfigError("region: resolution must be positive");
    }
    RegionMap map;
    map.lambdas = axis(lambda_range, options.resolution);
    map.mus = axis(mu_range, options.resolution);
    map.cells.reserve(map.lambdas.size() * map.mus.size());
    for (double lambda : map.lambdas) {
        for (double mu : map.mus) {
            RegionCell cell;
            cell.lambda = lambda;
            cell.mu = mu;
            cell.cls = classify_or_mark(op, SystemParams{lambda, mu, p, q}, config, options.classify,
                                        &cell.T_est);
            map.cells.push_back(cell);
        }
    }

    for (std::size_t i = 0; i < map.lambdas.size(); ++i) {
        BoundaryEstimate est;
        est.lambda = map.lambdas[i];
        double lo = mu_range.first;
        double hi = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t j = 0; j < map.mus.size(); ++j) {
            const PointClass c = map.at(i, j).cls;
            if (c == PointClass::Global) {
                lo = map.mus[j];
            } else if (c == PointClass::AllQuench) {
                hi = map.mus[j];
                break;
            } else {
                est.resolved = false;
                break;
            }
        }
        if (std::isnan(hi)) {
            // Global up to the top of the range; the switch lies beyond it, below 1.
            hi = std::max(1.0, mu_range.second);
            if (lo >= hi) {
                est.resolved = false;
            }
        }
        if (est.resolved) {
            for (std::size_t k = 0; k < options.bisect_steps; ++k) {
                const double mid = 0.5 * (lo + hi);
                const PointClass c = classify_or_mark(op, SystemParams{est.lambda, mid, p, q}, config,
                                                      options.classify, nullptr);
                if (c == PointClass::Global) {
                    lo = mid;
                } else if (c == PointClass::AllQuench) {
                    hi = mid;
                } else {
                    est.resolved = false;
                    break;
                }
            }
        }
        est.mu_star_lo = lo;
        est.mu_star_hi = hi;
        map.boundary.push_back(est);
    }
    return map;
}

std::size_t staircase_violations(const RegionMap& map) {
    std::size_t count = 0;
    const std::size_t nl = map.lambdas.size();
    const std::size_t nm = map.mus.size();
    for (std::size_t i = 0; i < nl; ++i) {
        for (std::size_t j = 0; j < nm; ++j) {
            if (map.at(i, j).cls != PointClass::Global) continue;
            for (std::size_t a = 0; a <= i; ++a) {
                for (std::size_t b = 0; b <= j; ++b) {
                    if (map.at(a, b).cls != PointClass::Global) ++count;
                }
            }
        }
    }
    return count;
}

MonotonicityVerdict check_stationary_monotonicity(
    const std::vector<std::pair<SystemParams, StationaryPair>>& pairs, double slack) {
    MonotonicityVerdict verdict;
    for (std::size_t a = 0; a < pairs.size(); ++a) {
        for (std::size_t b = 0; b < pairs.size(); ++b) {
            if (a == b) continue;
            const SystemParams& p1 = pairs[a].first;
            const SystemParams& p2 = pairs[b].first;
            if (!(p1.lambda <= p2.lambda && p1.mu <= p2.mu)) continue;
            const StationaryPair& s1 = pairs[a].second;
            const StationaryPair& s2 = pairs[b].second;
            if (s1.w.size() != s2.w.size()) {
                throw ConfigError("monotonicity: pairs solved on different grids");
            }
            ++verdict.comparisons;
            const double worst =
                std::max((s2.w - s1.w).maxCoeff(), (s2.z - s1.z).maxCoeff());
            if (worst > slack) {
                verdict.ok = false;
                verdict.violations.emplace_back(a, b);
            }
            verdict.worst_violation = std::max(verdict.worst_violation, worst);
        }
    }
    return verdict;
}

} // namespace quenchlab
