#include "quenchlab/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "quenchlab/errors.hpp"

namespace quenchlab {

void ShootingConfig::validate() const {
    params.validate();
    if (!(params.p < 1.0) || !(params.q < 1.0)) {
        throw ConfigError("shooting: requires p < 1 and q < 1");
    }
    if (u0_base.size() == 0 || u0_base.size() != v0_base.size()) {
        throw ConfigError("shooting: base data must be non-empty and of equal size");
    }
    if (!(u0_base.array() > 0.0).all() || !(v0_base.array() > 0.0).all()) {
        throw ConfigError("shooting: base data must be positive");
    }
    const double u_cap = std::min(1.0, std::pow(params.mu / 2.0, 1.0 / params.q));
    const double v_cap = std::min(1.0, std::pow(params.lambda / 2.0, 1.0 / params.p));
    if (u0_base.maxCoeff() > u_cap) {
        throw ConfigError("shooting: max u0_base exceeds min{1, (mu/2)^{1/q}} = " + std::to_string(u_cap));
    }
    if (v0_base.maxCoeff() > v_cap) {
        throw ConfigError("shooting: max v0_base exceeds min{1, (lambda/2)^{1/p}} = " + std::to_string(v_cap));
    }
    if (delta_samples < 2) {
        throw ConfigError("shooting: delta_samples must be at least 2");
    }
}

SolverConfig shooting_solver_defaults() {
    SolverConfig cfg;
    cfg.quench_threshold = 1e-18;
    return cfg;
}

double Tdelta_bound(const ShootingConfig& config, double delta) {
    return std::min(delta * config.u0_base.minCoeff(), (1.0 - delta) * config.v0_base.minCoeff());
}

ShootingRecord shoot_once(const ShootingConfig& config, const NonlocalOperator& op,
                          const SolverConfig& solver, double delta) {
    if (!(delta > 0.0) || !(delta < 1.0)) {
        throw ConfigError("shooting: delta must lie in (0, 1)");
    }
    State s0{0.0, delta * config.u0_base, (1.0 - delta) * config.v0_base};
    ShootingRecord rec;
    rec.delta = delta;
    const Derivative d0 = rhs(s0, op, config.params);
    rec.initial_du_max = d0.du.maxCoeff();
    rec.initial_dv_max = d0.dv.maxCoeff();

    const IntegrationResult run = integrate(s0, op, config.params, solver);
    rec.floor_u = std::numeric_limits<double>::infinity();
    rec.floor_v = std::numeric_limits<double>::infinity();
    for (const Sample& s : run.trajectory.samples) {
        rec.floor_u = std::min(rec.floor_u, s.min_u);
        rec.floor_v = std::min(rec.floor_v, s.min_v);
    }
    rec.regime = observed_regime(run.outcome, rec.floor_u, rec.floor_v, solver.quench_threshold);
    if (const auto* q = std::get_if<Quenched>(&run.outcome)) {
        rec.quenched = true;
        rec.T_delta = q->T_est;
    } else {
        rec.T_delta = run.clock.value();
    }
    return rec;
}

std::vector<ShootingRecord> sweep_delta(const ShootingConfig& config, const NonlocalOperator& op,
                                        const SolverConfig& solver, std::size_t samples) {
    config.validate();
    std::vector<ShootingRecord> out;
    out.reserve(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        const double delta = static_cast<double>(k + 1) / static_cast<double>(samples + 1);
        out.push_back(shoot_once(config, op, solver, delta));
    }
    return out;
}

ShootingResult run_shooting(const ShootingConfig& config, const NonlocalOperator& op,
                            const SolverConfig& solver) {
    ShootingResult res;
    res.sweep = sweep_delta(config, op, solver, config.delta_samples);

    std::ptrdiff_t lo_idx = -1;
    for (std::size_t k = 0; k < res.sweep.size(); ++k) {
        if (res.sweep[k].regime == Regime::NonSimultaneousU) {
            lo_idx = static_cast<std::ptrdiff_t>(k);
        }
    }
    if (lo_idx < 0) {
        throw SweepTooCoarse("shooting: no NonSimultaneousU sample; extend the sweep toward 0");
    }
    std::ptrdiff_t hi_idx = -1;
    for (std::size_t k = static_cast<std::size_t>(lo_idx) + 1; k < res.sweep.size(); ++k) {
        if (res.sweep[k].regime == Regime::NonSimultaneousV) {
            hi_idx = static_cast<std::ptrdiff_t>(k);
            break;
        }
    }
    if (hi_idx < 0) {
        throw SweepTooCoarse("shooting: no NonSimultaneousV sample above the last "
                             "NonSimultaneousU one; extend the sweep toward 1");
    }
    double lo = res.sweep[static_cast<std::size_t>(lo_idx)].delta;
    double hi = res.sweep[static_cast<std::size_t>(hi_idx)].delta;
    res.initial_width = hi - lo;

    std::map<double, Regime> seen;
    for (const ShootingRecord& r : res.sweep) seen.emplace(r.delta, r.regime);
    auto probe = [&](double delta) {
        if (const auto it = seen.find(delta); it != seen.end()) return it->second;
        res.probes.push_back(shoot_once(config, op, solver, delta));
        seen.emplace(delta, res.probes.back().regime);
        return res.probes.back().regime;
    };
    for (std::size_t step = 0; step < config.bisect_steps; ++step) {
        const double mid = 0.5 * (lo + hi);
        const Regime r = probe(mid);
        if (r == Regime::NonSimultaneousU) {
            lo = mid;
        } else if (r == Regime::NonSimultaneousV) {
            hi = mid;
        } else {
            const double left = 0.5 * (lo + mid);
            const double right = 0.5 * (mid + hi);
            if (probe(left) == Regime::NonSimultaneousU) lo = left;
            if (probe(right) == Regime::NonSimultaneousV) hi = right;
        }
    }
    res.delta_minus = lo;
    res.delta_plus = hi;
    return res;
}

double max_adjacent_jump(const std::vector<ShootingRecord>& records) {
    double jump = 0.0;
    for (std::size_t k = 1; k < records.size(); ++k) {
        jump = std::max(jump, std::abs(records[k].T_delta - records[k - 1].T_delta));
    }
    return jump;
}

namespace {

double max_spacing(const std::vector<ShootingRecord>& records) {
    double s = 0.0;
    for (std::size_t k = 1; k < records.size(); ++k) {
        s = std::max(s, records[k].delta - records[k - 1].delta);
    }
    return s;
}

} // namespace

TdeltaContinuity check_Tdelta_continuity(const std::vector<ShootingRecord>& coarse,
                                         const std::vector<ShootingRecord>& fine) {
    if (coarse.size() < 10 || fine.size() < 10) {
        throw ConfigError("T_delta continuity: at least 10 samples per sweep required");
    }
    TdeltaContinuity c;
    c.max_jump_coarse = max_adjacent_jump(coarse);
    c.max_jump_fine = max_adjacent_jump(fine);
    c.spacing_coarse = max_spacing(coarse);
    c.spacing_fine = max_spacing(fine);
    c.consistent = c.max_jump_fine < c.max_jump_coarse;
    return c;
}

std::size_t floor_u_decreases(const std::vector<ShootingRecord>& records, double slack) {
    std::size_t count = 0;
    for (std::size_t k = 1; k < records.size(); ++k) {
        if (records[k].floor_u < records[k - 1].floor_u - slack) ++count;
    }
    return count;
}

} // namespace quenchlab
