#pragma once

#include <Eigen/Dense>

#include "quenchlab/grid_kernel.hpp"

namespace quenchlab {

struct SystemParams {
    double lambda = 0.0;
    double mu = 0.0;
    double p = 1.0;
    double q = 1.0;

    // Throws ConfigError. Time evolution needs lambda, mu > 0; the stationary
    // solver also accepts the uncoupled limit lambda = mu = 0.
    void validate(bool allow_zero_coupling = false) const;
    bool operator==(const SystemParams&) const = default;
};

struct State {
    double t = 0.0;
    Eigen::VectorXd u;
    Eigen::VectorXd v;

    static State constant(std::size_t n, double u_value, double v_value);
    bool positive() const;
};

struct Derivative {
    Eigen::VectorXd du;
    Eigen::VectorXd dv;
};

struct AprioriBounds {
    double M_u = 1.0;
    double N_v = 1.0;
};

/// s^{-a} for s > 0; switches to exp(-a log s) below 1e-12. Throws
/// NumericalOverflow when the result is not finite.
double singular_power(double s, double a);

Derivative rhs(const State& state, const NonlocalOperator& op, const SystemParams& params);

/// Stacked form y = [u; v] used by the integrator and the Newton solver.
void rhs_stacked(const Eigen::VectorXd& y, const NonlocalOperator& op, const SystemParams& params,
                 Eigen::VectorXd& dy);

/// Dense 2n x 2n Jacobian [W - I, diag(lambda p v^{-p-1}); diag(mu q u^{-q-1}), W - I].
Eigen::MatrixXd jacobian(const State& state, const NonlocalOperator& op, const SystemParams& params);
void jacobian_stacked(const Eigen::VectorXd& y, const NonlocalOperator& op,
                      const SystemParams& params, Eigen::MatrixXd& jac);

AprioriBounds apriori_bounds(const Eigen::VectorXd& u0, const Eigen::VectorXd& v0);

/// Primitive of g^{-a} g_t: g^{1-a}/(1-a), or log g when a = 1.
double psi(double a, double g);

/// max_i |mu psi(q, u_i) - lambda psi(p, v_i)|
double psi_gap(const State& state, const SystemParams& params);
double psi_gap(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const SystemParams& params);

} // namespace quenchlab
