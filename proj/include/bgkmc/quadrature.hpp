#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace bgkmc {

/**
 * @brief Gauss-Legendre rule on the truncated velocity interval [-R, R].
 *
 * Nodes are strictly increasing and exactly symmetric. The grid is immutable
 * once built and is shared read-only by every sample solve.
 */
class VelocityGrid
{
public:
    VelocityGrid() = default;

    VelocityGrid(double half_width, std::vector<double> nodes, std::vector<double> weights)
        : half_width_(half_width)
        , nodes_(std::move(nodes))
        , weights_(std::move(weights))
    {
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    double half_width() const noexcept { return half_width_; }
    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    double node(std::size_t k) const { return nodes_[k]; }
    double weight(std::size_t k) const { return weights_[k]; }

private:
    double half_width_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

namespace detail {

// Legendre P_n(x) and its derivative by the three-term recurrence.
inline void legendre_with_derivative(int n, double x, double& p, double& dp)
{
    double p0 = 1.0;
    double p1 = x;
    if (n == 0)
    {
        p = 1.0;
        dp = 0.0;
        return;
    }
    for (int k = 2; k <= n; ++k)
    {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
    }
    p = p1;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
}

} // namespace detail

/// Newton on P_n from Chebyshev-type initial guesses; the upper half is
/// computed and mirrored so the rule is exactly symmetric.
inline VelocityGrid build_gauss_legendre(int num_nodes, double half_width)
{
    if (num_nodes < 1)
        throw InvalidArgument("build_gauss_legendre: node count must be >= 1, got "
                              + std::to_string(num_nodes));
    if (!(half_width > 0.0))
        throw InvalidArgument("build_gauss_legendre: half width must be > 0");

    const int n = num_nodes;
    std::vector<double> x(n), w(n);
    const int half = n / 2;
    for (int i = 0; i < half; ++i)
    {
        // i-th largest root
        double r = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double p = 0.0, dp = 0.0;
        for (int it = 0; it < 100; ++it)
        {
            detail::legendre_with_derivative(n, r, p, dp);
            const double dr = p / dp;
            r -= dr;
            if (std::abs(dr) <= 1e-15)
                break;
        }
        detail::legendre_with_derivative(n, r, p, dp);
        const double wi = 2.0 / ((1.0 - r * r) * dp * dp);
        x[n - 1 - i] = r;
        x[i] = -r;
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    if (n % 2 == 1)
    {
        double p = 0.0, dp = 0.0;
        detail::legendre_with_derivative(n, 0.0, p, dp);
        x[half] = 0.0;
        w[half] = (n == 1) ? 2.0 : 2.0 / (dp * dp);
    }
    for (int i = 0; i < n; ++i)
    {
        x[i] *= half_width;
        w[i] *= half_width;
    }
    return VelocityGrid(half_width, std::move(x), std::move(w));
}

/// Quadrature functional <u> = sum_k u(xi_k) w_k.
inline double bracket(const VelocityGrid& grid, std::span<const double> values)
{
    if (values.size() != grid.size())
        throw InvalidArgument("bracket: expected " + std::to_string(grid.size())
                              + " values, got " + std::to_string(values.size()));
    const auto w = grid.weights();
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
        s += values[k] * w[k];
    return s;
}

} // namespace bgkmc
