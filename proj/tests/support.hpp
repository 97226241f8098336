#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "quenchlab/grid_kernel.hpp"
#include "quenchlab/model.hpp"

namespace testsupport {

using quenchlab::NonlocalOperator;
using quenchlab::SystemParams;

inline NonlocalOperator epanechnikov_op(std::size_t n_half, double a = -2.0, double b = 2.0) {
    return quenchlab::build_operator(quenchlab::build_grid(a, b, n_half), quenchlab::Kernel::epanechnikov());
}

// W = I, b = 0: diffusion switched off, pure absorption at every node.
inline NonlocalOperator absorption_only_op(std::size_t n_half) {
    NonlocalOperator op{quenchlab::build_grid(-2.0, 2.0, n_half), {}, {}};
    const auto n = static_cast<Eigen::Index>(op.grid.size());
    op.weights = Eigen::MatrixXd::Identity(n, n);
    op.exterior = Eigen::VectorXd::Zero(n);
    return op;
}

// Independent right-hand side written out node by node.
inline void plain_rhs(const Eigen::VectorXd& y, const NonlocalOperator& op, const SystemParams& prm,
                      Eigen::VectorXd& dy) {
    const auto n = static_cast<Eigen::Index>(op.size());
    dy.resize(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double wu = 0.0, wv = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            wu += op.weights(i, j) * y(j);
            wv += op.weights(i, j) * y(n + j);
        }
        dy(i) = wu + op.exterior(i) - y(i) - prm.lambda * std::pow(y(n + i), -prm.p);
        dy(n + i) = wv + op.exterior(i) - y(n + i) - prm.mu * std::pow(y(i), -prm.q);
    }
}

// Classical fixed-step fourth-order Runge-Kutta on [0, t_end].
inline Eigen::VectorXd rk4(Eigen::VectorXd y, const NonlocalOperator& op, const SystemParams& prm,
                           double t_end, double dt) {
    const auto steps = static_cast<long>(std::llround(t_end / dt));
    Eigen::VectorXd k1, k2, k3, k4;
    for (long s = 0; s < steps; ++s) {
        plain_rhs(y, op, prm, k1);
        plain_rhs(y + 0.5 * dt * k1, op, prm, k2);
        plain_rhs(y + 0.5 * dt * k2, op, prm, k3);
        plain_rhs(y + dt * k3, op, prm, k4);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

// Central differences of plain_rhs, step 1e-7 * max(1, |y_j|).
inline Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& y, const NonlocalOperator& op,
                                   const SystemParams& prm) {
    const Eigen::Index m = y.size();
    Eigen::MatrixXd jac(m, m);
    Eigen::VectorXd fp, fm;
    for (Eigen::Index j = 0; j < m; ++j) {
        const double step = 1e-7 * std::max(1.0, std::abs(y(j)));
        Eigen::VectorXd yp = y, ym = y;
        yp(j) += step;
        ym(j) -= step;
        plain_rhs(yp, op, prm, fp);
        plain_rhs(ym, op, prm, fm);
        jac.col(j) = (fp - fm) / (2.0 * step);
    }
    return jac;
}

inline Eigen::VectorXd random_positive(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

// ∫_{-1}^{s} 3/4 (1 - x^2) dx, clamped.
inline double epanechnikov_cdf(double s) {
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return 0.75 * (s - s * s * s / 3.0) + 0.5;
}

// 1 - ∫_a^b J(x - y) dy in closed form.
inline double exact_exterior(double x, double a, double b) {
    return 1.0 - (epanechnikov_cdf(x - a) - epanechnikov_cdf(x - b));
}

} // namespace testsupport
