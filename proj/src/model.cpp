#include "quenchlab/model.hpp"

#include <cmath>
#include <string>

#include "quenchlab/errors.hpp"

namespace quenchlab {

void SystemParams::validate(bool allow_zero_coupling) const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(lambda) || !finite(mu) || !finite(p) || !finite(q)) {
        throw ConfigError("params: non-finite value");
    }
    if (!(p > 0.0) || !(q > 0.0)) {
        throw ConfigError("params: exponents p and q must be positive");
    }
    if (allow_zero_coupling) {
        if (lambda < 0.0 || mu < 0.0) {
            throw ConfigError("params: lambda and mu must be nonnegative");
        }
    } else if (!(lambda > 0.0) || !(mu > 0.0)) {
        throw ConfigError("params: lambda and mu must be positive");
    }
}

State State::constant(std::size_t n, double u_value, double v_value) {
    const auto len = static_cast<Eigen::Index>(n);
    return State{0.0, Eigen::VectorXd::Constant(len, u_value), Eigen::VectorXd::Constant(len, v_value)};
}

bool State::positive() const { return (u.array() > 0.0).all() && (v.array() > 0.0).all(); }

double singular_power(double s, double a) {
    const double r = s < 1e-12 ? std::exp(-a * std::log(s)) : std::pow(s, -a);
    if (!std::isfinite(r)) {
        throw NumericalOverflow("singular term overflow: s=" + std::to_string(s));
    }
    return r;
}

void rhs_stacked(const Eigen::VectorXd& y, const NonlocalOperator& op, const SystemParams& params,
                 Eigen::VectorXd& dy) {
    const auto n = static_cast<Eigen::Index>(op.size());
    const auto u = y.head(n);
    const auto v = y.tail(n);
    dy.resize(2 * n);
    dy.head(n).noalias() = op.weights * u;
    dy.tail(n).noalias() = op.weights * v;
    for (Eigen::Index i = 0; i < n; ++i) {
        dy(i) += op.exterior(i) - u(i) - params.lambda * singular_power(v(i), params.p);
        dy(n + i) += op.exterior(i) - v(i) - params.mu * singular_power(u(i), params.q);
    }
}

Derivative rhs(const State& state, const NonlocalOperator& op, const SystemParams& params) {
    const auto n = static_cast<Eigen::Index>(op.size());
    if (state.u.size() != n || state.v.size() != n) {
        throw ConfigError("rhs: state size does not match the operator");
    }
    Eigen::VectorXd y(2 * n);
    y << state.u, state.v;
    Eigen::VectorXd dy;
    rhs_stacked(y, op, params, dy);
    return Derivative{dy.head(n), dy.tail(n)};
}

void jacobian_stacked(const Eigen::VectorXd& y, const NonlocalOperator& op,
                      const SystemParams& params, Eigen::MatrixXd& jac) {
    const auto n = static_cast<Eigen::Index>(op.size());
    jac.setZero(2 * n, 2 * n);
    jac.topLeftCorner(n, n) = op.weights;
    jac.bottomRightCorner(n, n) = op.weights;
    for (Eigen::Index i = 0; i < n; ++i) {
        jac(i, i) -= 1.0;
        jac(n + i, n + i) -= 1.0;
        jac(i, n + i) = params.lambda * params.p * singular_power(y(n + i), params.p + 1.0);
        jac(n + i, i) = params.mu * params.q * singular_power(y(i), params.q + 1.0);
    }
}

Eigen::MatrixXd jacobian(const State& state, const NonlocalOperator& op, const SystemParams& params) {
    const auto n = static_cast<Eigen::Index>(op.size());
    Eigen::VectorXd y(2 * n);
    y << state.u, state.v;
    Eigen::MatrixXd jac;
    jacobian_stacked(y, op, params, jac);
    return jac;
}

AprioriBounds apriori_bounds(const Eigen::VectorXd& u0, const Eigen::VectorXd& v0) {
    return AprioriBounds{std::max(1.0, u0.maxCoeff()), std::max(1.0, v0.maxCoeff())};
}

double psi(double a, double g) {
    if (!(g > 0.0)) {
        throw DomainError("psi: argument must be positive");
    }
    if (a == 1.0) {
        return std::log(g);
    }
    return std::pow(g, 1.0 - a) / (1.0 - a);
}

double psi_gap(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const SystemParams& params) {
    double gap = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        gap = std::max(gap, std::abs(params.mu * psi(params.q, u(i)) - params.lambda * psi(params.p, v(i))));
    }
    return gap;
}

double psi_gap(const State& state, const SystemParams& params) {
    return psi_gap(state.u, state.v, params);
}

} // namespace quenchlab
