#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "estimators.hpp"
#include "quadrature.hpp"
#include "random_inputs.hpp"
#include "sample_farm.hpp"
#include "sampling.hpp"

namespace bgkmc {

// ---------------------------------------------------------------------------
// stochastic collocation

/// Gauss-Legendre nodes on [-1, 1] with weights normalised to the uniform density.
struct CollocationRule
{
    std::vector<double> nodes;
    std::vector<double> weights;

    static CollocationRule gauss_legendre(int nc)
    {
        if (nc < 1)
            throw InvalidArgument("collocation: need at least one node");
        const VelocityGrid g = build_gauss_legendre(nc, 1.0);
        CollocationRule r;
        for (std::size_t k = 0; k < g.size(); ++k)
        {
            r.nodes.push_back(g.node(k));
            r.weights.push_back(0.5 * g.weight(k));
        }
        return r;
    }

    /// E and V = E[q^2] - E[q]^2 of per-node fields values[k][cell].
    MeanVariance integrate(const std::vector<std::vector<double>>& values) const
    {
        if (values.size() != nodes.size() || values.empty())
            throw InvalidArgument("collocation: one field per node required");
        const std::size_t n = values.front().size();
        MeanVariance mv{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
        std::vector<double> second(n, 0.0);
        for (std::size_t k = 0; k < nodes.size(); ++k)
        {
            if (values[k].size() != n)
                throw InvalidArgument("collocation: field length mismatch");
            for (std::size_t c = 0; c < n; ++c)
            {
                mv.mean[c] += weights[k] * values[k][c];
                second[c] += weights[k] * values[k][c] * values[k][c];
            }
        }
        for (std::size_t c = 0; c < n; ++c)
            mv.variance[c] = std::max(0.0, second[c] - mv.mean[c] * mv.mean[c]);
        return mv;
    }
};

struct ReferenceSolution
{
    std::string kind = "collocation";
    std::string scenario;
    int nc = 0;
    int nx = 0;
    double t = 0.0;
    std::vector<double> x;
    std::array<MeanVariance, 3> stats;

    const MeanVariance& of(Quantity q) const { return stats[static_cast<int>(q)]; }

    /// Cell-averaged onto a nested coarser mesh.
    ReferenceSolution restricted(int coarse_nx) const
    {
        ReferenceSolution r = *this;
        r.nx = coarse_nx;
        for (auto& s : r.stats)
        {
            s.mean = restrict_average(s.mean, coarse_nx);
            s.variance = restrict_average(s.variance, coarse_nx);
        }
        r.x = restrict_average(x, coarse_nx);
        return r;
    }
};

/// Deterministic solves at the Gauss-Legendre nodes in z; node solves run on the worker pool.
inline ReferenceSolution collocation_reference(const Scenario& sc, int nc, int nx,
                                               const SolverSetup& setup, unsigned threads = 0,
                                               std::optional<double> t = std::nullopt)
{
    const CollocationRule rule = CollocationRule::gauss_legendre(nc);
    const VelocityGrid grid = setup.grid();
    const double tf = t.value_or(sc.final_time);
    auto fields = parallel_map(rule.nodes.size(), threads, [&](std::size_t k) {
        return macro_fields(solve_at(sc, rule.nodes[k], nx, grid, setup, tf).moments);
    });
    ReferenceSolution ref;
    ref.scenario = std::string(to_string(sc.id));
    ref.nc = nc;
    ref.nx = nx;
    ref.t = tf;
    const SpatialMesh mesh = sc.mesh(nx);
    for (int j = 0; j < nx; ++j)
        ref.x.push_back(mesh.center(j));
    for (Quantity q : kQuantities)
    {
        std::vector<std::vector<double>> vals;
        for (const auto& f : fields)
            vals.push_back(field_of(f, q));
        ref.stats[static_cast<int>(q)] = rule.integrate(vals);
    }
    return ref;
}

// ---------------------------------------------------------------------------
// exact Riemann solver for the Euler limit, gamma = 5/3, p = rho T

struct PrimitiveState
{
    double rho = 1.0;
    double U = 0.0;
    double T = 1.0;

    double p() const { return rho * T; }
};

class ExactRiemann
{
public:
    ExactRiemann(PrimitiveState left, PrimitiveState right, double gamma = 5.0 / 3.0,
                 double tolerance = 1e-12)
        : l_(left)
        , r_(right)
        , g_(gamma)
    {
        if (!(l_.rho > 0.0 && r_.rho > 0.0 && l_.T > 0.0 && r_.T > 0.0))
            throw InvalidArgument("exact Riemann: densities and temperatures must be positive");
        cl_ = std::sqrt(g_ * l_.p() / l_.rho);
        cr_ = std::sqrt(g_ * r_.p() / r_.rho);
        if (2.0 / (g_ - 1.0) * (cl_ + cr_) <= r_.U - l_.U)
            throw UnsupportedInput("exact Riemann: data generate vacuum");
        solve(tolerance);
    }

    double star_pressure() const { return p_star_; }
    double star_velocity() const { return u_star_; }
    int iterations() const { return iterations_; }
    double gamma() const { return g_; }

    /// Pressure function f_K(p) and its derivative for side K.
    void pressure_function(double p, const PrimitiveState& s, double c, double& f, double& df) const
    {
        const double pk = s.p();
        if (p > pk)
        {
            const double a = 2.0 / ((g_ + 1.0) * s.rho);
            const double b = (g_ - 1.0) / (g_ + 1.0) * pk;
            const double q = std::sqrt(a / (p + b));
            f = (p - pk) * q;
            df = q * (1.0 - 0.5 * (p - pk) / (b + p));
        }
        else
        {
            const double pr = p / pk;
            f = 2.0 * c / (g_ - 1.0) * (std::pow(pr, (g_ - 1.0) / (2.0 * g_)) - 1.0);
            df = 1.0 / (s.rho * c) * std::pow(pr, -(g_ + 1.0) / (2.0 * g_));
        }
    }

    /// Self-similar solution at xi = (x - x0) / t.
    PrimitiveState sample(double xi) const
    {
        const double g = g_;
        auto out = [](double rho, double u, double p) { return PrimitiveState{rho, u, p / rho}; };
        if (xi <= u_star_)
        {
            const double pl = l_.p();
            if (p_star_ > pl)
            {
                const double pr = p_star_ / pl;
                const double sl = l_.U - cl_ * std::sqrt((g + 1.0) / (2.0 * g) * pr + (g - 1.0) / (2.0 * g));
                if (xi <= sl)
                    return l_;
                const double gm = (g - 1.0) / (g + 1.0);
                return out(l_.rho * (pr + gm) / (pr * gm + 1.0), u_star_, p_star_);
            }
            const double shl = l_.U - cl_;
            if (xi <= shl)
                return l_;
            const double cml = cl_ * std::pow(p_star_ / pl, (g - 1.0) / (2.0 * g));
            const double stl = u_star_ - cml;
            if (xi > stl)
                return out(l_.rho * std::pow(p_star_ / pl, 1.0 / g), u_star_, p_star_);
            const double c = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * cl_) * (l_.U - xi);
            const double rho = l_.rho * std::pow(c, 2.0 / (g - 1.0));
            const double u = 2.0 / (g + 1.0) * (cl_ + (g - 1.0) / 2.0 * l_.U + xi);
            return out(rho, u, pl * std::pow(c, 2.0 * g / (g - 1.0)));
        }
        const double pr_ = r_.p();
        if (p_star_ > pr_)
        {
            const double pr = p_star_ / pr_;
            const double sr = r_.U + cr_ * std::sqrt((g + 1.0) / (2.0 * g) * pr + (g - 1.0) / (2.0 * g));
            if (xi >= sr)
                return r_;
            const double gm = (g - 1.0) / (g + 1.0);
            return out(r_.rho * (pr + gm) / (pr * gm + 1.0), u_star_, p_star_);
        }
        const double shr = r_.U + cr_;
        if (xi >= shr)
            return r_;
        const double cmr = cr_ * std::pow(p_star_ / pr_, (g - 1.0) / (2.0 * g));
        const double str = u_star_ + cmr;
        if (xi < str)
            return out(r_.rho * std::pow(p_star_ / pr_, 1.0 / g), u_star_, p_star_);
        const double c = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * cr_) * (r_.U - xi);
        const double rho = r_.rho * std::pow(c, 2.0 / (g - 1.0));
        const double u = 2.0 / (g + 1.0) * (-cr_ + (g - 1.0) / 2.0 * r_.U + xi);
        return out(rho, u, pr_ * std::pow(c, 2.0 * g / (g - 1.0)));
    }

private:
    void solve(double tol)
    {
        const double g = g_;
        const double z = (g - 1.0) / (2.0 * g);
        const double du = r_.U - l_.U;
        // two-rarefaction guess
        double p = std::pow((cl_ + cr_ - 0.5 * (g - 1.0) * du)
                                / (cl_ / std::pow(l_.p(), z) + cr_ / std::pow(r_.p(), z)),
                            1.0 / z);
        p = std::max(p, tol);
        for (iterations_ = 1; iterations_ <= 100; ++iterations_)
        {
            double fl, dfl, fr, dfr;
            pressure_function(p, l_, cl_, fl, dfl);
            pressure_function(p, r_, cr_, fr, dfr);
            double pn = p - (fl + fr + du) / (dfl + dfr);
            if (pn < 0.0)
                pn = tol;
            const double change = 2.0 * std::abs(pn - p) / (pn + p);
            p = pn;
            if (change < tol)
            {
                p_star_ = p;
                pressure_function(p, l_, cl_, fl, dfl);
                pressure_function(p, r_, cr_, fr, dfr);
                u_star_ = 0.5 * (l_.U + r_.U) + 0.5 * (fr - fl);
                return;
            }
        }
        throw ConvergenceFailure("exact Riemann: star pressure iteration did not converge", p);
    }

    PrimitiveState l_, r_;
    double g_;
    double cl_ = 0.0, cr_ = 0.0;
    double p_star_ = 0.0, u_star_ = 0.0;
    int iterations_ = 0;
};

/// Profile of the exact solution at the similarity coordinates xi = x/t.
inline std::vector<PrimitiveState> euler_riemann_exact(const PrimitiveState& left,
                                                       const PrimitiveState& right,
                                                       std::span<const double> xi)
{
    const ExactRiemann rs(left, right);
    std::vector<PrimitiveState> out;
    out.reserve(xi.size());
    for (double s : xi)
        out.push_back(rs.sample(s));
    return out;
}

// ---------------------------------------------------------------------------
// error functionals over K replications

namespace detail {

inline void check_error_inputs(const std::vector<std::vector<double>>& reps,
                               const std::vector<double>& ref)
{
    if (reps.empty())
        throw InvalidArgument("error: at least one replication required");
    for (const auto& r : reps)
        if (r.size() != ref.size())
            throw InvalidArgument("error: mesh mismatch between estimate (" + std::to_string(r.size())
                                  + " cells) and reference (" + std::to_string(ref.size()) + ")");
}

} // namespace detail

/// sqrt( (1/K) sum_k ||q^(k) - q_ref||_{L1}^2 ) with ||v||_{L1} = dx sum |v|.
inline double error_overall(const std::vector<std::vector<double>>& reps,
                            const std::vector<double>& ref, double domain_length = 1.0)
{
    detail::check_error_inputs(reps, ref);
    const double dx = domain_length / static_cast<double>(ref.size());
    double acc = 0.0;
    for (const auto& r : reps)
    {
        double l1 = 0.0;
        for (std::size_t c = 0; c < ref.size(); ++c)
            l1 += std::abs(r[c] - ref[c]);
        l1 *= dx;
        acc += l1 * l1;
    }
    return std::sqrt(acc / static_cast<double>(reps.size()));
}

/// Per-cell RMS over replications of q^(k) - q_ref.
inline std::vector<double> error_pointwise(const std::vector<std::vector<double>>& reps,
                                           const std::vector<double>& ref)
{
    detail::check_error_inputs(reps, ref);
    std::vector<double> out(ref.size(), 0.0);
    for (const auto& r : reps)
        for (std::size_t c = 0; c < ref.size(); ++c)
            out[c] += (r[c] - ref[c]) * (r[c] - ref[c]);
    for (double& v : out)
        v = std::sqrt(v / static_cast<double>(reps.size()));
    return out;
}

/// Same functional against a reference computed on the estimator's own finest mesh.
inline std::vector<double> error_relative(const std::vector<std::vector<double>>& reps,
                                          const std::vector<double>& matched_ref)
{
    return error_pointwise(reps, matched_ref);
}

} // namespace bgkmc
