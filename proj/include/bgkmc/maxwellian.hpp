#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "quadrature.hpp"

namespace bgkmc {

/// Conservative triple of one cell plus the derived bulk velocity and temperature.
struct Moments
{
    double rho = 0.0;
    double m = 0.0;
    double E = 0.0;

    double U() const { return m / rho; }
    double T() const { return (2.0 * rho * E - m * m) / (3.0 * rho * rho); }

    static Moments from_primitive(double rho, double U, double T)
    {
        return {rho, rho * U, 0.5 * rho * U * U + 1.5 * rho * T};
    }
};

/// Exponent coefficients of M_phi(v) = exp(a1 + a2 v + a3 v^2), a3 < 0.
struct MaxwellParams
{
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double alpha3 = -0.5;

    /// Coefficients of the continuous reduced Maxwellian with the given state.
    static MaxwellParams continuous(double rho, double U, double T)
    {
        return {std::log(rho / std::sqrt(2.0 * std::numbers::pi * T)) - U * U / (2.0 * T),
                U / T,
                -1.0 / (2.0 * T)};
    }
};

struct NewtonSettings
{
    double tolerance = 1e-12;
    int max_iterations = 50;
    int max_halvings = 20;
};

struct NewtonReport
{
    int iterations = 0;
    double residual = 0.0;
};

/// Quadrature moments (rho, m, E) without any validity check.
inline Moments raw_moments(const VelocityGrid& grid, std::span<const double> phi,
                           std::span<const double> psi)
{
    const auto xi = grid.nodes();
    const auto w = grid.weights();
    double rho = 0.0, m = 0.0, e = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k)
    {
        const double wp = w[k] * phi[k];
        rho += wp;
        m += wp * xi[k];
        e += 0.5 * wp * xi[k] * xi[k] + w[k] * psi[k];
    }
    return {rho, m, e};
}

inline Moments moments_from_state(const VelocityGrid& grid, std::span<const double> phi,
                                  std::span<const double> psi)
{
    if (phi.size() != grid.size() || psi.size() != grid.size())
        throw InvalidArgument("moments_from_state: arrays must have one value per velocity node");
    const Moments mom = raw_moments(grid, phi, psi);
    if (!(mom.rho > 0.0) || !(mom.T() > 0.0))
        throw DegenerateState("moments_from_state: non-positive density or temperature (rho="
                              + std::to_string(mom.rho) + ", T=" + std::to_string(mom.T()) + ")");
    return mom;
}

namespace detail {

inline constexpr std::size_t kSums = 7;
using MaxwellSums = std::array<double, kSums>;

// S_j = <xi^j M>, j = 0..6, for node values mphi.
inline MaxwellSums node_sums(const VelocityGrid& grid, std::span<const double> mphi)
{
    const auto xi = grid.nodes();
    const auto w = grid.weights();
    const std::size_t n = xi.size();
    MaxwellSums s{};
    for (std::size_t k = 0; k < n; ++k)
    {
        const double a = w[k] * mphi[k];
        const double x2 = xi[k] * xi[k];
        const double x3 = x2 * xi[k];
        s[0] += a;
        s[1] += a * xi[k];
        s[2] += a * x2;
        s[3] += a * x3;
        s[4] += a * x2 * x2;
        s[5] += a * x3 * x2;
        s[6] += a * x3 * x3;
    }
    return s;
}

// Fills mphi with exp(a1 + a2 xi + a3 xi^2) and returns its sums.
inline MaxwellSums maxwell_sums(const VelocityGrid& grid, const MaxwellParams& p,
                                std::span<double> mphi)
{
    const auto xi = grid.nodes();
    const std::size_t n = xi.size();
    for (std::size_t k = 0; k < n; ++k)
        mphi[k] = std::exp(p.alpha1 + xi[k] * (p.alpha2 + p.alpha3 * xi[k]));
    return node_sums(grid, mphi);
}

// Moves from m_old (at parameters p - d) to m_new at p. Small increments use
// m_old * exp(d1 + d2 xi + d3 xi^2) with a degree-7 Taylor factor, whose
// truncation error is below 1e-19 when the exponent stays under 1/64.
inline MaxwellSums maxwell_sums_shifted(const VelocityGrid& grid, const MaxwellParams& p,
                                        const std::array<double, 3>& d,
                                        std::span<const double> m_old, std::span<double> m_new)
{
    const auto xi = grid.nodes();
    const std::size_t n = xi.size();
    const double xmax = std::max(std::abs(xi.front()), std::abs(xi.back()));
    const double bound = std::abs(d[0]) + xmax * std::abs(d[1]) + xmax * xmax * std::abs(d[2]);
    if (!(bound <= 1.0 / 64.0))
        return maxwell_sums(grid, p, m_new);
    for (std::size_t k = 0; k < n; ++k)
    {
        const double y = d[0] + xi[k] * (d[1] + d[2] * xi[k]);
        const double e = 1.0 + y * (1.0 + y * (1.0 / 2 + y * (1.0 / 6 + y * (1.0 / 24 + y * (1.0 / 120 + y * (1.0 / 720 + y * (1.0 / 5040)))))));
        m_new[k] = m_old[k] * e;
    }
    return node_sums(grid, m_new);
}

inline std::array<double, 3> maxwell_residual(const MaxwellSums& s, double alpha3,
                                              const Moments& target)
{
    return {s[0] - target.rho, s[1] - target.m, 0.5 * s[2] - s[0] / (2.0 * alpha3) - target.E};
}

inline double max_abs(const std::array<double, 3>& r)
{
    return std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
}

// Gaussian elimination with partial pivoting; returns false on a singular matrix.
inline bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
                   std::array<double, 3>& x)
{
    for (int c = 0; c < 3; ++c)
    {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c]))
                piv = r;
        if (a[piv][c] == 0.0 || !std::isfinite(a[piv][c]))
            return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < 3; ++r)
        {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 3; ++k)
                a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (int r = 2; r >= 0; --r)
    {
        double v = b[r];
        for (int k = r + 1; k < 3; ++k)
            v -= a[r][k] * x[k];
        x[r] = v / a[r][r];
    }
    return true;
}

} // namespace detail

/// Parameters together with their quadrature sums S_j = <xi^j M>, j = 0..6.
struct MaxwellEval
{
    MaxwellParams params;
    detail::MaxwellSums sums{};
};

/**
 * @brief Newton-Raphson for the discrete Maxwellian from a start whose node
 * values @p m and sums are already known. On return @p e and @p m describe
 * the converged Maxwellian; @p scratch (one value per node) is workspace.
 * Returns the number of iterations taken.
 *
 * The step is halved while it would make alpha3 >= -1e-8 or fail to decrease
 * the max-norm residual.
 */
inline int newton_maxwellian(const VelocityGrid& grid, const Moments& target, MaxwellEval& e,
                             std::span<double> m, std::span<double> scratch,
                             const NewtonSettings& settings, NewtonReport* report = nullptr)
{
    std::span<double> cur = m;
    std::span<double> next = scratch;
    auto finish = [&](int it, double res) {
        if (report)
            *report = {it, res};
        if (cur.data() != m.data())
            std::copy(cur.begin(), cur.end(), m.begin());
    };
    const double tol = settings.tolerance
                       * std::max({1.0, target.rho, std::abs(target.m), target.E});
    MaxwellParams& p = e.params;
    auto& s = e.sums;
    auto r = detail::maxwell_residual(s, p.alpha3, target);
    double res = detail::max_abs(r);

    int it = 0;
    for (; res > tol; ++it)
    {
        if (it == settings.max_iterations)
        {
            finish(it, res);
            throw ConvergenceFailure("solve_discrete_maxwellian: no convergence after "
                                         + std::to_string(it) + " iterations",
                                     res);
        }
        const double a3 = p.alpha3;
        const double inv = 1.0 / (2.0 * a3);
        std::array<std::array<double, 3>, 3> jac{{
            {s[0], s[1], s[2]},
            {s[1], s[2], s[3]},
            {0.5 * s[2] - s[0] * inv, 0.5 * s[3] - s[1] * inv,
             0.5 * s[4] - s[2] * inv + s[0] / (2.0 * a3 * a3)},
        }};
        std::array<double, 3> step{};
        if (!detail::solve3(jac, {-r[0], -r[1], -r[2]}, step))
            throw ConvergenceFailure("solve_discrete_maxwellian: singular Jacobian", res);

        // third-order (Chebyshev) correction -J^{-1} H(step, step) / 2 from the cached sums
        const auto [d0, d1, d2] = step;
        const std::array<double, 5> c{d0 * d0, 2.0 * d0 * d1, d1 * d1 + 2.0 * d0 * d2,
                                      2.0 * d1 * d2, d2 * d2};
        std::array<double, 3> h{};
        for (int j = 0; j < 5; ++j)
        {
            h[0] += c[j] * s[j];
            h[1] += c[j] * s[j + 1];
            h[2] += 0.5 * c[j] * s[j + 2];
        }
        const double ds0 = d0 * s[0] + d1 * s[1] + d2 * s[2];
        h[2] -= h[0] / (2.0 * a3) - ds0 * d2 / (a3 * a3) + s[0] * d2 * d2 / (a3 * a3 * a3);
        std::array<double, 3> corr{};
        if (detail::solve3(jac, {-0.5 * h[0], -0.5 * h[1], -0.5 * h[2]}, corr)
            && detail::max_abs(corr) <= 0.25 * detail::max_abs(step))
        {
            const std::array<double, 3> d{step[0] + corr[0], step[1] + corr[1], step[2] + corr[2]};
            MaxwellParams trial{p.alpha1 + d[0], p.alpha2 + d[1], p.alpha3 + d[2]};
            if (trial.alpha3 < -1e-8)
            {
                auto s_new = detail::maxwell_sums_shifted(grid, trial, d, cur, next);
                auto r_new = detail::maxwell_residual(s_new, trial.alpha3, target);
                const double res_new = detail::max_abs(r_new);
                if (res_new < res)
                {
                    p = trial;
                    s = s_new;
                    r = r_new;
                    res = res_new;
                    std::swap(cur, next);
                    continue;
                }
            }
        }

        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h <= settings.max_halvings; ++h, scale *= 0.5)
        {
            const std::array<double, 3> d{scale * step[0], scale * step[1], scale * step[2]};
            MaxwellParams trial{p.alpha1 + d[0], p.alpha2 + d[1], p.alpha3 + d[2]};
            if (!(trial.alpha3 < -1e-8))
                continue;
            auto s_new = detail::maxwell_sums_shifted(grid, trial, d, cur, next);
            auto r_new = detail::maxwell_residual(s_new, trial.alpha3, target);
            const double res_new = detail::max_abs(r_new);
            if (res_new < res)
            {
                p = trial;
                s = s_new;
                r = r_new;
                res = res_new;
                std::swap(cur, next);
                accepted = true;
                break;
            }
        }
        if (!accepted)
        {
            finish(it, res);
            throw ConvergenceFailure("solve_discrete_maxwellian: damping exhausted", res);
        }
    }
    finish(it, res);
    return it;
}

/**
 * @brief Newton-Raphson for the discrete Maxwellian whose quadrature moments
 * equal @p target exactly.
 *
 * @p scratch must hold one value per velocity node; on return it holds M_phi
 * at the returned parameters.
 */
inline MaxwellParams solve_discrete_maxwellian(const VelocityGrid& grid, const Moments& target,
                                               std::optional<MaxwellParams> guess,
                                               const NewtonSettings& settings,
                                               std::span<double> scratch,
                                               NewtonReport* report = nullptr)
{
    const double T = target.T();
    if (!(target.rho > 0.0) || !(T > 0.0) || !std::isfinite(target.E))
        throw InvalidArgument("solve_discrete_maxwellian: target needs rho > 0 and T > 0");

    MaxwellEval e{guess.value_or(MaxwellParams::continuous(target.rho, target.U(), T)), {}};
    e.sums = detail::maxwell_sums(grid, e.params, scratch);
    if (!std::isfinite(detail::max_abs(detail::maxwell_residual(e.sums, e.params.alpha3, target)))
        && guess)
    {
        e.params = MaxwellParams::continuous(target.rho, target.U(), T);
        e.sums = detail::maxwell_sums(grid, e.params, scratch);
    }
    std::vector<double> work(grid.size());
    newton_maxwellian(grid, target, e, scratch, work, settings, report);
    return e.params;
}

inline MaxwellParams solve_discrete_maxwellian(const VelocityGrid& grid, const Moments& target,
                                               std::optional<MaxwellParams> guess = std::nullopt,
                                               const NewtonSettings& settings = {},
                                               NewtonReport* report = nullptr)
{
    std::vector<double> scratch(grid.size());
    return solve_discrete_maxwellian(grid, target, guess, settings, scratch, report);
}

/// (M_phi, M_psi) at the velocity nodes, M_psi = -M_phi / (2 alpha3).
inline std::pair<std::vector<double>, std::vector<double>>
eval_maxwellian_pair(const VelocityGrid& grid, const MaxwellParams& p)
{
    if (!(p.alpha3 < 0.0))
        throw InvalidArgument("eval_maxwellian_pair: alpha3 must be negative");
    std::vector<double> phi(grid.size()), psi(grid.size());
    const double c = -1.0 / (2.0 * p.alpha3);
    for (std::size_t k = 0; k < grid.size(); ++k)
    {
        const double v = grid.node(k);
        phi[k] = std::exp(p.alpha1 + v * (p.alpha2 + p.alpha3 * v));
        psi[k] = c * phi[k];
    }
    return {std::move(phi), std::move(psi)};
}

/// Reduced continuous Maxwellian rho/sqrt(2 pi T) exp(-(v-U)^2/(2T)) and psi = T phi.
inline void continuous_maxwellian_into(const VelocityGrid& grid, double rho, double U, double T,
                                       std::span<double> phi, std::span<double> psi)
{
    if (!(rho > 0.0) || !(T > 0.0))
        throw InvalidArgument("continuous_maxwellian_pair: rho and T must be positive");
    const double amp = rho / std::sqrt(2.0 * std::numbers::pi * T);
    for (std::size_t k = 0; k < grid.size(); ++k)
    {
        const double d = grid.node(k) - U;
        phi[k] = amp * std::exp(-d * d / (2.0 * T));
        psi[k] = T * phi[k];
    }
}

inline std::pair<std::vector<double>, std::vector<double>>
continuous_maxwellian_pair(const VelocityGrid& grid, double rho, double U, double T)
{
    std::vector<double> phi(grid.size()), psi(grid.size());
    continuous_maxwellian_into(grid, rho, U, T, phi, psi);
    return {std::move(phi), std::move(psi)};
}

} // namespace bgkmc
