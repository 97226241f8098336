#include <gtest/gtest.h>

#include <cmath>

#include "quenchlab/stationary.hpp"
#include "support.hpp"

using namespace quenchlab;

namespace {

const SystemParams kGlobal{.lambda = 0.001, .mu = 0.001, .p = 2.0, .q = 3.0};

StationaryPair newton_from_ones(const NonlocalOperator& op, const SystemParams& prm) {
    const auto n = static_cast<Eigen::Index>(op.size());
    const StationaryResult r = solve_stationary_newton(op, prm, Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(n));
    if (!std::holds_alternative<StationaryPair>(r)) {
        ADD_FAILURE() << "no pair: " << std::get<NoStationary>(r).reason;
        return {};
    }
    return std::get<StationaryPair>(r);
}

// Independent residual of the stationary equations.
double residual(const NonlocalOperator& op, const SystemParams& prm, const StationaryPair& s) {
    Eigen::VectorXd y(2 * s.w.size()), f;
    y << s.w, s.z;
    testsupport::plain_rhs(y, op, prm, f);
    return f.cwiseAbs().maxCoeff();
}

} // namespace

TEST(Newton, UncoupledLimitIsOnes) {
    const NonlocalOperator op = testsupport::epanechnikov_op(20);
    const StationaryPair s = newton_from_ones(op, {.lambda = 0.0, .mu = 0.0, .p = 2.0, .q = 3.0});
    EXPECT_LE(s.iterations, 1u);
    EXPECT_EQ(s.w, Eigen::VectorXd::Ones(s.w.size()));
    EXPECT_EQ(s.z, Eigen::VectorXd::Ones(s.z.size()));
}

TEST(Newton, SmallCouplingsConvergeWithinBounds) {
    const NonlocalOperator op = testsupport::epanechnikov_op(40);
    const StationaryPair s = newton_from_ones(op, kGlobal);
    EXPECT_LT(residual(op, kGlobal, s), 1e-11);
    EXPECT_GT(s.w.minCoeff(), std::pow(kGlobal.mu, 1.0 / kGlobal.q));
    EXPECT_GT(s.z.minCoeff(), std::pow(kGlobal.lambda, 1.0 / kGlobal.p));
    EXPECT_LE(s.w.maxCoeff(), 1.0 + 1e-12);
    EXPECT_LE(s.z.maxCoeff(), 1.0 + 1e-12);
    EXPECT_NEAR(s.lower_margin_w, s.w.minCoeff() - std::pow(kGlobal.mu, 1.0 / kGlobal.q), 1e-14);
    EXPECT_NEAR(s.lower_margin_z, s.z.minCoeff() - std::pow(kGlobal.lambda, 1.0 / kGlobal.p), 1e-14);
    EXPECT_GT(s.upper_margin, -1e-12);
}

TEST(Newton, LargeLambdaHasNoStationaryPair) {
    const NonlocalOperator op = testsupport::epanechnikov_op(20);
    const auto n = static_cast<Eigen::Index>(op.size());
    for (const SystemParams& prm : {SystemParams{.lambda = 1.0, .mu = 0.1, .p = 2.0, .q = 3.0},
                                    SystemParams{.lambda = 1.0, .mu = 0.1, .p = 0.5, .q = 0.5},
                                    SystemParams{.lambda = 2.0, .mu = 2.0, .p = 2.0, .q = 2.0}}) {
        const StationaryResult r =
            solve_stationary_newton(op, prm, Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(n));
        EXPECT_TRUE(std::holds_alternative<NoStationary>(r)) << prm.lambda << " " << prm.p;
    }
}

TEST(Newton, MonotoneInParameters) {
    const NonlocalOperator op = testsupport::epanechnikov_op(20);
    std::vector<std::pair<SystemParams, StationaryPair>> pairs;
    for (auto [l, m] : {std::pair{0.0, 0.0}, {0.001, 0.001}, {0.002, 0.002}, {0.001, 0.002}, {0.003, 0.001}}) {
        const SystemParams prm{.lambda = l, .mu = m, .p = 2.0, .q = 3.0};
        pairs.emplace_back(prm, newton_from_ones(op, prm));
    }
    const MonotonicityVerdict v = check_stationary_monotonicity(pairs);
    EXPECT_TRUE(v.ok) << v.worst_violation;
    EXPECT_GT(v.comparisons, 0u);
    // ones dominate everything
    for (const auto& [prm, s] : pairs) {
        EXPECT_LE(s.w.maxCoeff(), 1.0 + 1e-12);
        EXPECT_LE(s.z.maxCoeff(), 1.0 + 1e-12);
    }
    // identical parameters compare equal
    const MonotonicityVerdict same = check_stationary_monotonicity({pairs[1], pairs[1]});
    EXPECT_TRUE(same.ok);
}

TEST(Newton, MonotonicityViolationDetected) {
    const NonlocalOperator op = testsupport::epanechnikov_op(10);
    const SystemParams small{.lambda = 0.001, .mu = 0.001, .p = 2.0, .q = 3.0};
    const SystemParams large{.lambda = 0.003, .mu = 0.003, .p = 2.0, .q = 3.0};
    // swapped labels: the larger parameters carry the larger pair
    const MonotonicityVerdict v =
        check_stationary_monotonicity({{small, newton_from_ones(op, large)}, {large, newton_from_ones(op, small)}});
    EXPECT_FALSE(v.ok);
    EXPECT_FALSE(v.violations.empty());
}

TEST(Certificate, DetectsLowNode) {
    const NonlocalOperator op = testsupport::epanechnikov_op(10);
    const SystemParams prm{.lambda = 0.1, .mu = 0.001, .p = 2.0, .q = 3.0};
    const auto n = static_cast<Eigen::Index>(op.size());
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n), v = Eigen::VectorXd::Ones(n);
    EXPECT_FALSE(quench_certificate(u, v, op, prm));
    // thresholds (mu)^{1/3} = 0.1 and (lambda)^{1/2} = 0.316
    u(4) = 0.09;
    v(4) = 0.3;
    const auto node = quench_certificate(u, v, op, prm);
    ASSERT_TRUE(node);
    EXPECT_EQ(*node, 4u);
    // lowering at different nodes does not certify
    v(4) = 1.0;
    v(5) = 0.3;
    EXPECT_FALSE(quench_certificate(u, v, op, prm));
}

TEST(Classify, GlobalAndAllQuench) {
    const NonlocalOperator op = testsupport::epanechnikov_op(25);
    SolverConfig cfg;
    const PointClassification g = classify_parameter_point(op, kGlobal, cfg);
    EXPECT_EQ(g.cls, PointClass::Global);
    ASSERT_TRUE(g.steady_u && g.steady_v);

    const PointClassification q =
        classify_parameter_point(op, {.lambda = 0.1, .mu = 0.001, .p = 2.0, .q = 3.0}, cfg);
    EXPECT_EQ(q.cls, PointClass::AllQuench);
    ASSERT_TRUE(q.T_est);
    EXPECT_NEAR(*q.T_est, 9.0619, 0.2);

    const PointClassification big = classify_parameter_point(op, {.lambda = 2.0, .mu = 2.0, .p = 2.0, .q = 2.0}, cfg);
    EXPECT_EQ(big.cls, PointClass::AllQuench);

    const PointClassification cert = classify_parameter_point(
        op, {.lambda = 2.0, .mu = 2.0, .p = 2.0, .q = 2.0}, cfg, {.stop_on_certificate = true});
    EXPECT_EQ(cert.cls, PointClass::AllQuench);
    EXPECT_TRUE(cert.certified);
    EXPECT_LT(cert.t_end, *big.T_est);
}

TEST(Classify, TimeoutEscalatesThenThrows) {
    const NonlocalOperator op = testsupport::epanechnikov_op(10);
    SolverConfig cfg;
    cfg.t_max = 0.01;
    EXPECT_THROW(classify_parameter_point(op, kGlobal, cfg, {.escalation = 2.0}), Unresolved);
}

TEST(Stationary, NewtonAgreesWithEvolutionLimitFromAbove) {
    const NonlocalOperator op = testsupport::epanechnikov_op(30);
    SolverConfig cfg;
    cfg.steady_tol = 1e-12;
    cfg.snapshot_every = 50;
    const StationaryPair s = newton_from_ones(op, kGlobal);
    const IntegrationResult r = integrate(State::constant(op.size(), 1, 1), op, kGlobal, cfg);
    ASSERT_TRUE(is_steady(r.outcome));
    const double diff = std::max((r.final_state.u - s.w).cwiseAbs().maxCoeff(),
                                 (r.final_state.v - s.z).cwiseAbs().maxCoeff());
    EXPECT_LE(diff, 1e-8);
    for (const State& st : r.trajectory.snapshots) {
        ASSERT_GE((st.u - s.w).minCoeff(), -1e-9) << st.t;
        ASSERT_GE((st.v - s.z).minCoeff(), -1e-9) << st.t;
    }
}

TEST(Region, SmallMapNearOrigin) {
    const NonlocalOperator op = testsupport::epanechnikov_op(20);
    SolverConfig cfg;
    RegionOptions opt;
    opt.resolution = 3;
    opt.bisect_steps = 3;
    const RegionMap map = map_region(op, 2.0, 2.0, {0.0, 0.01}, {0.0, 0.01}, cfg, opt);
    ASSERT_EQ(map.cells.size(), 9u);
    EXPECT_NEAR(map.lambdas.front(), 0.01 / 3, 1e-15);
    EXPECT_NEAR(map.lambdas.back(), 0.01, 1e-15);
    EXPECT_EQ(staircase_violations(map), 0u);
    std::size_t global = 0, quench = 0;
    for (const RegionCell& c : map.cells) {
        ASSERT_NE(c.cls, PointClass::Unresolved);
        if (c.cls == PointClass::Global) {
            ++global;
            EXPECT_LT(c.lambda, 1.0);
            EXPECT_LT(c.mu, 1.0);
        } else {
            ++quench;
        }
    }
    EXPECT_GT(global, 0u);
    EXPECT_GT(quench, 0u);
    // a cell agrees with its single-point classification
    const RegionCell& corner = map.at(2, 2);
    const PointClassification single = classify_parameter_point(
        op, {.lambda = corner.lambda, .mu = corner.mu, .p = 2.0, .q = 2.0}, cfg);
    EXPECT_EQ(single.cls, corner.cls);
    // every boundary bracket is consistent with the column
    ASSERT_EQ(map.boundary.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        const BoundaryEstimate& b = map.boundary[i];
        EXPECT_TRUE(b.resolved);
        EXPECT_LE(b.mu_star_lo, b.mu_star_hi);
        for (std::size_t j = 0; j < 3; ++j) {
            const RegionCell& c = map.at(i, j);
            if (c.cls == PointClass::Global) EXPECT_LE(c.mu, b.mu_star_hi);
            if (c.cls == PointClass::AllQuench) EXPECT_GE(c.mu, b.mu_star_lo);
        }
    }
}

TEST(Region, StaircaseCounterCountsViolations) {
    RegionMap m;
    m.lambdas = {1, 2};
    m.mus = {1, 2};
    m.cells = {{1, 1, PointClass::AllQuench, {}}, {1, 2, PointClass::Global, {}},
               {2, 1, PointClass::Global, {}}, {2, 2, PointClass::Global, {}}};
    // (1,1) is below three Global cells
    EXPECT_EQ(staircase_violations(m), 3u);
}

TEST(PointClassNames, RoundTrip) {
    for (PointClass c : {PointClass::Global, PointClass::AllQuench, PointClass::Unresolved}) {
        EXPECT_EQ(point_class_from_string(to_string(c)), c);
    }
}
