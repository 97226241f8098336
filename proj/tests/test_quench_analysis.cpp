#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "quenchlab/quench_analysis.hpp"
#include "support.hpp"

using namespace quenchlab;

namespace {

const SystemParams kHeadline{.lambda = 0.1, .mu = 0.001, .p = 2.0, .q = 3.0};

// Samples with T - t log-spaced from 1 down to ttg_end; min_u = c_u (T-t)^a_u etc.
Trajectory power_law_trajectory(double a_u, double a_v, double ttg_end, std::size_t count,
                                double noise = 0.0, unsigned seed = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-noise, noise);
    Trajectory t;
    double prev = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double ttg = std::pow(ttg_end, static_cast<double>(k) / static_cast<double>(count - 1));
        Sample s;
        s.t = 1.0 - ttg;
        s.elapsed = k == 0 ? 0.0 : prev - ttg;
        s.min_u = std::pow(ttg, a_u) * (1.0 + jitter(rng));
        s.min_v = std::pow(ttg, a_v) * (1.0 + jitter(rng));
        t.samples.push_back(s);
        prev = ttg;
    }
    return t;
}

IntegrationResult run(const NonlocalOperator& op, const SystemParams& prm, const State& s0,
                      SolverConfig cfg = {}) {
    return integrate(s0, op, prm, cfg);
}

} // namespace

TEST(Regime, Prediction) {
    EXPECT_EQ(predict_regime(kHeadline), Regime::Simultaneous);
    EXPECT_EQ(predict_regime({.lambda = 0.1, .mu = 0.1, .p = 2.0, .q = 0.7}), Regime::NonSimultaneousU);
    EXPECT_EQ(predict_regime({.lambda = 0.1, .mu = 0.1, .p = 0.2, .q = 3.0}), Regime::NonSimultaneousV);
    EXPECT_EQ(predict_regime({.lambda = 1, .mu = 1, .p = 0.5, .q = 0.5}), Regime::Either);
    for (Regime r : {Regime::Simultaneous, Regime::NonSimultaneousU, Regime::NonSimultaneousV, Regime::Either,
                     Regime::Global, Regime::Indeterminate}) {
        EXPECT_EQ(regime_from_string(to_string(r)), r);
    }
}

TEST(RateLaws, Exponents) {
    const auto [u, v] = theoretical_rates(kHeadline);
    EXPECT_DOUBLE_EQ(u.power, 0.2);
    EXPECT_DOUBLE_EQ(v.power, 0.4);
    EXPECT_FALSE(u.has_log_factor());

    const auto [u1, v1] = theoretical_rates({.lambda = 0.3, .mu = 0.3, .p = 1.0, .q = 1.0});
    EXPECT_DOUBLE_EQ(u1.power, 0.5);
    EXPECT_DOUBLE_EQ(v1.power, 0.5);

    const auto [un, vn] = theoretical_rates({.lambda = 0.1, .mu = 0.1, .p = 2.0, .q = 0.7});
    EXPECT_DOUBLE_EQ(un.power, 1.0);
    EXPECT_TRUE(vn.bounded);

    const auto [ul, vl] = theoretical_rates({.lambda = 0.1, .mu = 0.1, .p = 3.0, .q = 1.0});
    EXPECT_TRUE(ul.has_log_factor() || vl.has_log_factor());
}

TEST(Fit, LeastSquaresExactLine) {
    const RateFit f = least_squares_line({0, 1, 2, 3}, {1, 3, 5, 7});
    EXPECT_NEAR(f.slope, 2.0, 1e-15);
    EXPECT_NEAR(f.intercept, 1.0, 1e-15);
    EXPECT_NEAR(f.residual_norm, 0.0, 1e-15);
    EXPECT_EQ(f.count, 4u);
}

TEST(Fit, ExactPowerLaw) {
    const Trajectory t = power_law_trajectory(0.2, 0.4, 1e-30, 3000);
    const double corr = 1e-30;
    EXPECT_NEAR(fit_rate(t, corr, Component::U).slope, 0.2, 1e-3);
    EXPECT_NEAR(fit_rate(t, corr, Component::V).slope, 0.4, 1e-3);
}

TEST(Fit, NoisyPowerLaw) {
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const Trajectory t = power_law_trajectory(0.2, 0.4, 1e-30, 3000, 0.01, seed);
        EXPECT_NEAR(fit_rate(t, 1e-30, Component::U).slope, 0.2, 0.01);
        EXPECT_NEAR(fit_rate(t, 1e-30, Component::V).slope, 0.4, 0.01);
    }
}

TEST(Fit, InsufficientWindowThrows) {
    const Trajectory t = power_law_trajectory(0.2, 0.4, 1e-30, 30);
    EXPECT_THROW(fit_rate(t, 1e-30, Component::U), InsufficientWindow);
}

TEST(Fit, LogAbscissa) {
    // m = |log(T - t)|^{-1}: slope -1 against log|log(T - t)|
    Trajectory t;
    double prev = 0.0;
    for (int k = 1; k <= 2000; ++k) {
        const double ttg = std::exp(-0.05 * k);
        Sample s;
        s.elapsed = k == 1 ? 0.0 : prev - ttg;
        s.min_u = 1.0 / std::abs(std::log(ttg));
        s.min_v = s.min_u;
        t.samples.push_back(s);
        prev = ttg;
    }
    EXPECT_NEAR(fit_log_rate(t, prev, Component::U, {1e-3, 0.5}).slope, -1.0, 1e-9);
}

TEST(Observed, RegimeFromFloors) {
    const Outcome q = Quenched{};
    const double eps = 1e-6;
    EXPECT_EQ(observed_regime(q, 5e-7, 6e-7, eps), Regime::Simultaneous);
    EXPECT_EQ(observed_regime(q, 5e-7, 1e-5, eps), Regime::NonSimultaneousU);
    EXPECT_EQ(observed_regime(q, 1e-4, 5e-7, eps), Regime::NonSimultaneousV);
    EXPECT_EQ(observed_regime(q, 5e-7, 5e-6, eps), Regime::Indeterminate);
    EXPECT_EQ(observed_regime(Steady{}, 0.5, 0.5, eps), Regime::Global);
    EXPECT_EQ(observed_regime(TimedOut{}, 0.5, 0.5, eps), Regime::Global);
}

TEST(PsiGap, BoundFormula) {
    EXPECT_DOUBLE_EQ(psi_gap_bound(0.0995, {1.0, 1.0}, 9.0619), 0.0995 + 8.0 * 10.0619);
    EXPECT_DOUBLE_EQ(psi_gap_bound(0.0, {3.0, 2.0}, 1.0), 96.0);
}

TEST(Relation, AbsorptionOnlyFirstIntegralIsExact) {
    // u' = -v^{-2}, v' = -u^{-2} from u0 = v0: mu/u - lambda/v stays 0, so u = v
    const NonlocalOperator op = testsupport::absorption_only_op(8);
    const SystemParams prm{.lambda = 1.0, .mu = 1.0, .p = 2.0, .q = 2.0};
    State s0;
    s0.u = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(op.size()), 0.6, 1.4);
    s0.v = s0.u;
    SolverConfig cfg;
    const IntegrationResult r = run(op, prm, s0, cfg);
    const ComponentRelation rel = check_component_relation(r.trajectory, prm, cfg.quench_threshold);
    EXPECT_TRUE(rel.bounded);
    EXPECT_NEAR(rel.spread, 1.0, 1e-12);
    for (double x : rel.ratio) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(Relation, LinearExponentsSymmetricData) {
    const NonlocalOperator op = testsupport::epanechnikov_op(10);
    const SystemParams prm{.lambda = 0.5, .mu = 0.5, .p = 1.0, .q = 1.0};
    SolverConfig cfg;
    const IntegrationResult r = run(op, prm, State::constant(op.size(), 1, 1), cfg);
    const ComponentRelation rel = check_component_relation(r.trajectory, prm, cfg.quench_threshold);
    for (double x : rel.ratio) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(Relation, NotApplicableForMixedExponents) {
    const Trajectory t = power_law_trajectory(1.0, 0.0, 1e-8, 100);
    EXPECT_THROW(check_component_relation(t, {.lambda = 0.1, .mu = 0.1, .p = 2.0, .q = 0.7}, 1e-6),
                 NotApplicable);
}

TEST(QuenchSet, SymmetricDataGivesSymmetricSet) {
    const NonlocalOperator op = testsupport::epanechnikov_op(20);
    const IntegrationResult r = run(op, kHeadline, State::constant(op.size(), 1, 1));
    const auto set = detect_quench_set(r.trajectory, op.grid, 0.0, 1e-6);
    ASSERT_FALSE(set.empty());
    for (double x : set) {
        bool mirrored = false;
        for (double y : set) mirrored = mirrored || std::abs(x + y) <= op.grid.h() + 1e-12;
        EXPECT_TRUE(mirrored) << x;
    }
}

TEST(QuenchSet, DipAtOneIsFound) {
    const NonlocalOperator op = testsupport::epanechnikov_op(40);
    const SystemParams prm{.lambda = 0.3, .mu = 0.3, .p = 2.0, .q = 2.0};
    State s0 = State::constant(op.size(), 1, 1);
    for (std::size_t i = 0; i < op.grid.size(); ++i) {
        s0.u(static_cast<Eigen::Index>(i)) -= 0.5 * std::max(0.0, 1.0 - 4.0 * std::abs(op.grid[i] - 1.0));
    }
    SolverConfig cfg;
    const IntegrationResult r = run(op, prm, s0, cfg);
    ASSERT_TRUE(is_quenched(r.outcome));
    const auto set = detect_quench_set(r.trajectory, op.grid, op.grid.h(), cfg.quench_threshold);
    // oracle: argmin of the final full snapshot
    const double x_snap = op.grid[argmin_index(r.trajectory.snapshots.back().u)];
    EXPECT_NEAR(x_snap, 1.0, op.grid.h() + 1e-12);
    bool found = false;
    for (double x : set) found = found || std::abs(x - x_snap) <= op.grid.h() + 1e-12;
    EXPECT_TRUE(found);
}

TEST(Analyze, HeadlineCoarse) {
    const NonlocalOperator op = testsupport::epanechnikov_op(25);
    SolverConfig cfg;
    const IntegrationResult r = run(op, kHeadline, State::constant(op.size(), 1, 1), cfg);
    const QuenchReport rep = analyze(r, op.grid, kHeadline, cfg);
    EXPECT_EQ(rep.regime_observed, rep.regime_predicted);
    EXPECT_LE(rep.floor_u, cfg.quench_threshold);
    EXPECT_LE(rep.floor_v, cfg.quench_threshold);
    ASSERT_TRUE(rep.alpha_u && rep.alpha_v);
    EXPECT_NEAR(*rep.alpha_u, 0.2, 0.03);
    EXPECT_NEAR(*rep.alpha_v, 0.4, 0.03);
    EXPECT_LE(rep.psi_gap_max, rep.psi_gap_bound);
    EXPECT_NEAR(rep.psi_gap_initial, 0.0995, 1e-15);
    ASSERT_TRUE(rep.relation);
    EXPECT_TRUE(rep.relation->bounded);
    ASSERT_EQ(rep.quench_set.size(), 1u);
    EXPECT_NEAR(rep.quench_set[0], 0.0, op.grid.h());

    // shifting the window by half a decade
    const double shift = std::sqrt(10.0);
    const RateFit fu = fit_rate(r.trajectory, rep.T_correction, Component::U, {1e-5 / shift, 1e-2 / shift});
    const RateFit fv = fit_rate(r.trajectory, rep.T_correction, Component::V, {1e-5 * shift, 1e-2 * shift});
    EXPECT_LT(std::abs(fu.slope - *rep.alpha_u), 0.02);
    EXPECT_LT(std::abs(fv.slope - *rep.alpha_v), 0.02);
}

TEST(Analyze, NonSimultaneousCoarse) {
    const NonlocalOperator op = testsupport::epanechnikov_op(25);
    SolverConfig cfg;
    const SystemParams prm_u{.lambda = 0.1, .mu = 0.1, .p = 2.0, .q = 0.7};
    const QuenchReport ru = analyze(run(op, prm_u, State::constant(op.size(), 1, 1), cfg), op.grid, prm_u, cfg);
    EXPECT_EQ(ru.regime_observed, Regime::NonSimultaneousU);
    EXPECT_GE(ru.floor_v, 10 * cfg.quench_threshold);
    ASSERT_TRUE(ru.alpha_u);
    EXPECT_FALSE(ru.alpha_v);
    EXPECT_FALSE(ru.relation);

    const SystemParams prm_v{.lambda = 0.1, .mu = 0.1, .p = 0.2, .q = 3.0};
    const QuenchReport rv = analyze(run(op, prm_v, State::constant(op.size(), 1, 1), cfg), op.grid, prm_v, cfg);
    EXPECT_EQ(rv.regime_observed, Regime::NonSimultaneousV);
    EXPECT_GE(rv.floor_u, 10 * cfg.quench_threshold);
    ASSERT_TRUE(rv.alpha_v);
    EXPECT_NEAR(*rv.alpha_v, 1.0, 0.05);
}

TEST(Analyze, SteadyRunHasNoFits) {
    const NonlocalOperator op = testsupport::epanechnikov_op(10);
    SolverConfig cfg;
    const SystemParams prm{.lambda = 0.001, .mu = 0.001, .p = 2.0, .q = 3.0};
    const QuenchReport rep = analyze(run(op, prm, State::constant(op.size(), 1, 1), cfg), op.grid, prm, cfg);
    EXPECT_EQ(rep.regime_observed, Regime::Global);
    EXPECT_FALSE(rep.alpha_u);
    EXPECT_TRUE(rep.quench_set.empty());
}
