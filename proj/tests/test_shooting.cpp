#include <gtest/gtest.h>

#include <cmath>

#include "quenchlab/errors.hpp"
#include "quenchlab/shooting.hpp"
#include "support.hpp"

using namespace quenchlab;

namespace {

class Shooting : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        op_ = new NonlocalOperator(testsupport::epanechnikov_op(10));
    }
    static void TearDownTestSuite() {
        delete op_;
        op_ = nullptr;
    }

    static ShootingConfig config(std::size_t samples = 9, std::size_t steps = 10) {
        ShootingConfig c;
        c.params = {.lambda = 1.0, .mu = 1.0, .p = 0.5, .q = 0.5};
        const auto n = static_cast<Eigen::Index>(op_->size());
        c.u0_base = Eigen::VectorXd::Constant(n, 0.2);
        c.v0_base = c.u0_base;
        c.delta_samples = samples;
        c.bisect_steps = steps;
        return c;
    }

    static NonlocalOperator* op_;
};

NonlocalOperator* Shooting::op_ = nullptr;

} // namespace

TEST_F(Shooting, EndpointsAndSymmetricPoint) {
    const ShootingConfig c = config();
    const SolverConfig s = shooting_solver_defaults();
    EXPECT_EQ(shoot_once(c, *op_, s, 0.95).regime, Regime::NonSimultaneousV);
    EXPECT_EQ(shoot_once(c, *op_, s, 0.05).regime, Regime::NonSimultaneousU);
    const ShootingRecord mid = shoot_once(c, *op_, s, 0.5);
    EXPECT_EQ(mid.regime, Regime::Simultaneous);
    // u and v evolve identically up to rounding, amplified near the singularity
    EXPECT_NEAR(mid.floor_u, mid.floor_v, 1e-6 * mid.floor_u);
}

TEST_F(Shooting, MirrorSymmetryOfSweep) {
    const auto sweep = sweep_delta(config(), *op_, shooting_solver_defaults(), 9);
    ASSERT_EQ(sweep.size(), 9u);
    for (std::size_t k = 0; k < 9; ++k) {
        EXPECT_NEAR(sweep[k].delta, static_cast<double>(k + 1) / 10.0, 1e-15);
        EXPECT_NEAR(sweep[k].T_delta, sweep[8 - k].T_delta, 1e-9 * sweep[k].T_delta);
    }
}

TEST_F(Shooting, UniversalQuenchingAndBounds) {
    const ShootingConfig c = config(19);
    const auto sweep = sweep_delta(c, *op_, shooting_solver_defaults(), 19);
    for (const ShootingRecord& r : sweep) {
        EXPECT_TRUE(r.quenched) << r.delta;
        EXPECT_LT(r.initial_du_max, -1.0) << r.delta;
        EXPECT_LT(r.initial_dv_max, -1.0) << r.delta;
        EXPECT_GT(r.T_delta, 0.0);
        EXPECT_LE(r.T_delta, Tdelta_bound(c, r.delta)) << r.delta;
    }
    EXPECT_EQ(floor_u_decreases(sweep), 0u);
}

TEST_F(Shooting, BoundFormula) {
    const ShootingConfig c = config();
    EXPECT_NEAR(Tdelta_bound(c, 0.25), 0.05, 1e-15);
    EXPECT_NEAR(Tdelta_bound(c, 0.5), 0.1, 1e-15);
    EXPECT_NEAR(Tdelta_bound(c, 0.9), 0.02, 1e-15);
}

TEST_F(Shooting, BisectionShrinksBracket) {
    const ShootingConfig c = config(9, 10);
    const SolverConfig s = shooting_solver_defaults();
    const ShootingResult r = run_shooting(c, *op_, s);
    EXPECT_NEAR(r.initial_width, 0.2, 1e-12);
    EXPECT_LE(r.width(), std::ldexp(r.initial_width, -10) + 1e-15);
    EXPECT_LT(r.delta_minus, 0.5);
    EXPECT_GT(r.delta_plus, 0.5);
    EXPECT_EQ(shoot_once(c, *op_, s, r.delta_minus).regime, Regime::NonSimultaneousU);
    EXPECT_EQ(shoot_once(c, *op_, s, r.delta_plus).regime, Regime::NonSimultaneousV);
}

TEST_F(Shooting, Deterministic) {
    const ShootingConfig c = config();
    const SolverConfig s = shooting_solver_defaults();
    EXPECT_EQ(shoot_once(c, *op_, s, 0.3).T_delta, shoot_once(c, *op_, s, 0.3).T_delta);
}

TEST_F(Shooting, TdeltaContinuityUnderRefinement) {
    const ShootingConfig c = config();
    const SolverConfig s = shooting_solver_defaults();
    const auto coarse = sweep_delta(c, *op_, s, 10);
    const auto fine = sweep_delta(c, *op_, s, 20);
    const TdeltaContinuity cont = check_Tdelta_continuity(coarse, fine);
    EXPECT_TRUE(cont.consistent);
    EXPECT_LT(cont.max_jump_fine, cont.max_jump_coarse);
    EXPECT_NEAR(cont.max_jump_coarse, max_adjacent_jump(coarse), 0.0);
    EXPECT_THROW(check_Tdelta_continuity(sweep_delta(c, *op_, s, 5), fine), ConfigError);
}

TEST_F(Shooting, ValidationRejectsBadSetups) {
    ShootingConfig c = config();
    EXPECT_NO_THROW(c.validate());
    c.params.p = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = config();
    // (mu/2)^{1/q} = 0.25
    c.u0_base.setConstant(0.3);
    EXPECT_THROW(c.validate(), ConfigError);
    c = config();
    c.v0_base(0) = -0.1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = config();
    c.delta_samples = 1;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ShootingHelpers, FloorDecreasesAndJumps) {
    std::vector<ShootingRecord> recs(3);
    recs[0].floor_u = 1.0;
    recs[1].floor_u = 0.5;
    recs[2].floor_u = 2.0;
    recs[0].T_delta = 1.0;
    recs[1].T_delta = 1.5;
    recs[2].T_delta = 1.25;
    EXPECT_EQ(floor_u_decreases(recs), 1u);
    EXPECT_DOUBLE_EQ(max_adjacent_jump(recs), 0.5);
}
