#include "quenchlab/grid_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "quenchlab/errors.hpp"

namespace quenchlab {

Grid::Grid(double a, double b, std::size_t n_half) : a_(a), b_(b), n_half_(n_half) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
        throw ConfigError("grid: require finite a < b");
    }
    if (n_half == 0) {
        throw ConfigError("grid: N must be at least 1");
    }
    const std::size_t n = 2 * n_half + 1;
    h_ = (b - a) / static_cast<double>(2 * n_half);
    nodes_.resize(n);
    // Fill symmetrically from both ends so that the endpoints are exact and
    // x_0 lands on the midpoint for symmetric intervals.
    for (std::size_t k = 0; k < n; ++k) {
        if (k <= n_half) {
            nodes_[k] = a + static_cast<double>(k) * h_;
        } else {
            nodes_[k] = b - static_cast<double>(n - 1 - k) * h_;
        }
    }
    nodes_[n_half] = 0.5 * (a + b);
}

std::size_t Grid::nearest(double x) const {
    const double pos = (x - a_) / h_;
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(size() - 1));
    auto idx = static_cast<std::size_t>(std::floor(clamped));
    if (idx + 1 < size() && std::abs(nodes_[idx + 1] - x) < std::abs(nodes_[idx] - x)) {
        ++idx;
    }
    return idx;
}

Grid build_grid(double a, double b, std::size_t n_half) { return Grid(a, b, n_half); }

// ---------------------------------------------------------------------------

Kernel::Kernel(Shape shape, double amplitude, double radius)
    : shape_(shape), amplitude_(amplitude), radius_(radius) {}

Kernel Kernel::epanechnikov(double amplitude) { return Kernel(Shape::Epanechnikov, amplitude, 1.0); }

Kernel Kernel::uniform(double amplitude) { return Kernel(Shape::Uniform, amplitude, 1.0); }

Kernel Kernel::tabulated(std::vector<double> xs, std::vector<double> values) {
    if (xs.size() < 2 || xs.size() != values.size()) {
        throw ConfigError("kernel table: need at least two (x, value) rows");
    }
    for (std::size_t k = 1; k < xs.size(); ++k) {
        if (!(xs[k] > xs[k - 1])) {
            throw ConfigError("kernel table: x must be strictly increasing");
        }
    }
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ConfigError("kernel table: values must be finite and nonnegative");
        }
    }
    const double radius = std::max(std::abs(xs.front()), std::abs(xs.back()));
    Kernel k(Shape::Tabulated, 1.0, radius);
    k.xs_ = std::move(xs);
    k.values_ = std::move(values);
    return k;
}

Kernel Kernel::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("kernel table: cannot open " + path.string());
    }
    std::vector<double> xs;
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream row(line);
        double x = 0.0;
        double v = 0.0;
        if (!(row >> x)) {
            continue; // blank
        }
        if (!(row >> v)) {
            throw ConfigError("kernel table: malformed line " + std::to_string(lineno) + " in " +
                              path.string());
        }
        xs.push_back(x);
        values.push_back(v);
    }
    return tabulated(std::move(xs), std::move(values));
}

Kernel Kernel::from_spec(const std::string& spec) {
    if (spec == "epanechnikov") {
        return epanechnikov();
    }
    if (spec == "uniform") {
        return uniform();
    }
    return from_file(spec);
}

std::string Kernel::name() const {
    switch (shape_) {
    case Shape::Epanechnikov:
        return "epanechnikov";
    case Shape::Uniform:
        return "uniform";
    case Shape::Tabulated:
        return "tabulated";
    }
    return "unknown";
}

double Kernel::operator()(double x) const {
    switch (shape_) {
    case Shape::Epanechnikov: {
        const double s = 1.0 - x * x;
        return s > 0.0 ? amplitude_ * 0.75 * s : 0.0;
    }
    case Shape::Uniform:
        return std::abs(x) <= 1.0 ? amplitude_ * 0.5 : 0.0;
    case Shape::Tabulated: {
        // A table starting at x >= 0 describes the radial profile J(|x|).
        const double arg = xs_.front() >= 0.0 ? std::abs(x) : x;
        if (arg < xs_.front() || arg > xs_.back()) {
            return 0.0;
        }
        const auto it = std::upper_bound(xs_.begin(), xs_.end(), arg);
        if (it == xs_.end()) {
            return values_.back();
        }
        const auto k = static_cast<std::size_t>(it - xs_.begin());
        const double w = (arg - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
        return (1.0 - w) * values_[k - 1] + w * values_[k];
    }
    }
    return 0.0;
}

void Kernel::validate(double mass_tol) const {
    constexpr std::size_t samples = 2001;
    double previous = (*this)(0.0);
    for (std::size_t k = 0; k < samples; ++k) {
        const double x = radius_ * static_cast<double>(k) / static_cast<double>(samples - 1);
        const double jp = (*this)(x);
        const double jm = (*this)(-x);
        if (jp < 0.0 || !std::isfinite(jp)) {
            throw ConfigError("kernel: negative or non-finite value at x=" + std::to_string(x));
        }
        if (std::abs(jp - jm) > 1e-12 * std::max(1.0, std::abs(jp))) {
            throw ConfigError("kernel: not symmetric at x=" + std::to_string(x));
        }
        if (jp > previous + 1e-12) {
            throw ConfigError("kernel: not nonincreasing in |x| at x=" + std::to_string(x));
        }
        previous = jp;
    }
    const double mass = kernel_mass(*this, 1 << 14);
    if (std::abs(mass - 1.0) > mass_tol) {
        throw ConfigError("kernel: total mass " + std::to_string(mass) + " differs from 1");
    }
}

double kernel_mass(const Kernel& kernel, std::size_t resolution) {
    std::size_t n = std::max<std::size_t>(resolution, 64);
    n += n % 2;
    const double r = kernel.support_radius();
    const double h = 2.0 * r / static_cast<double>(n);
    double sum = kernel(-r) + kernel(r);
    for (std::size_t k = 1; k < n; ++k) {
        const double x = -r + static_cast<double>(k) * h;
        sum += (k % 2 == 1 ? 4.0 : 2.0) * kernel(x);
    }
    return sum * h / 3.0;
}

// ---------------------------------------------------------------------------

NonlocalOperator build_operator(const Grid& grid, const Kernel& kernel, double mass_tol) {
    kernel.validate();
    const auto n = static_cast<Eigen::Index>(grid.size());
    NonlocalOperator op{grid, Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
    const double h = grid.h();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            op.weights(i, j) = h * kernel(grid[static_cast<std::size_t>(i)] -
                                          grid[static_cast<std::size_t>(j)]);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        op.exterior(i) = 1.0 - op.weights.row(i).sum();
        if (op.exterior(i) < -mass_tol) {
            throw ExteriorMassNegative("exterior mass b_" + std::to_string(i) + " = " +
                                       std::to_string(op.exterior(i)) +
                                       " below tolerance; grid too coarse for kernel");
        }
    }
    return op;
}

} // namespace quenchlab
