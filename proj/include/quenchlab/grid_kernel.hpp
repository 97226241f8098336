#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace quenchlab {

/// Uniform partition x_{-N} < ... < x_N of [a, b] with spacing h = (b - a) / (2N).
/// Nodes are stored with index 0 at x_{-N}.
class Grid {
public:
    Grid(double a, double b, std::size_t n_half);

    double a() const { return a_; }
    double b() const { return b_; }
    std::size_t n_half() const { return n_half_; }
    std::size_t size() const { return nodes_.size(); }
    double h() const { return h_; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }

    // Index of the node nearest to x (ties go to the smaller index).
    std::size_t nearest(double x) const;

private:
    double a_;
    double b_;
    std::size_t n_half_;
    double h_;
    std::vector<double> nodes_;
};

Grid build_grid(double a, double b, std::size_t n_half);

/// Radially symmetric, nonincreasing, nonnegative convolution kernel on the line.
///
/// Built-in profiles are evaluated in closed form; tabulated profiles are
/// linearly interpolated and vanish outside the table. `amplitude` multiplies
/// the profile, which lets tests construct kernels with the wrong mass.
class Kernel {
public:
    enum class Shape { Epanechnikov, Uniform, Tabulated };

    static Kernel epanechnikov(double amplitude = 1.0);
    static Kernel uniform(double amplitude = 1.0);
    static Kernel tabulated(std::vector<double> xs, std::vector<double> values);
    static Kernel from_file(const std::filesystem::path& path);
    // "epanechnikov", "uniform" or a path to a two-column table.
    static Kernel from_spec(const std::string& spec);

    double operator()(double x) const;
    double support_radius() const { return radius_; }
    Shape shape() const { return shape_; }
    std::string name() const;

    // Throws ConfigError unless the kernel is symmetric, nonincreasing in |x|
    // and has unit mass within mass_tol.
    void validate(double mass_tol = 1e-6) const;

private:
    Kernel(Shape shape, double amplitude, double radius);

    Shape shape_;
    double amplitude_;
    double radius_;
    std::vector<double> xs_;
    std::vector<double> values_;
};

/// Composite Simpson quadrature of the kernel over [-R, R].
double kernel_mass(const Kernel& kernel, std::size_t resolution);

/// Discrete nonlocal diffusion: (W u)_i + b_i - u_i approximates
/// J*u~ - u~ with u~ extended by 1 outside the domain.
struct NonlocalOperator {
    Grid grid;
    Eigen::MatrixXd weights;  // W[i][j] = h J(x_i - x_j)
    Eigen::VectorXd exterior; // b_i = 1 - sum_j W[i][j]

    std::size_t size() const { return grid.size(); }
};

inline constexpr double kExteriorMassTolerance = 1e-3;

NonlocalOperator build_operator(const Grid& grid, const Kernel& kernel,
                                double mass_tol = kExteriorMassTolerance);

} // namespace quenchlab
