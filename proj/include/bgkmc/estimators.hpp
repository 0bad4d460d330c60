#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace bgkmc {

/// Sample fields indexed [sample][cell].
using SampleMatrix = std::vector<std::vector<double>>;

enum class Optimizer { none, standard, quasi_optimal, optimal };

inline std::string_view to_string(Optimizer o)
{
    switch (o)
    {
    case Optimizer::none: return "mc";
    case Optimizer::standard: return "mlmc";
    case Optimizer::quasi_optimal: return "cv-quasi";
    case Optimizer::optimal: return "cv-optimal";
    }
    return "?";
}

struct Level
{
    int nx = 0;
    int samples = 0;
};

struct LevelPlan
{
    std::vector<Level> levels;
    Optimizer optimizer = Optimizer::standard;
    int replications = 1;

    int finest_nx() const { return levels.empty() ? 0 : levels.back().nx; }

    void validate() const
    {
        if (levels.empty())
            throw InvalidArgument("level plan: at least one level required");
        if (optimizer == Optimizer::none && levels.size() != 1)
            throw InvalidArgument("level plan: MC uses exactly one level");
        if (replications < 1)
            throw InvalidArgument("level plan: replications must be >= 1");
        for (std::size_t l = 0; l < levels.size(); ++l)
        {
            if (levels[l].nx < 2)
                throw InvalidArgument("level plan: nx must be >= 2");
            if (levels[l].samples < 1)
                throw InvalidArgument("level plan: every level needs at least one sample");
            if (l > 0 && levels[l].nx != 2 * levels[l - 1].nx)
                throw InvalidArgument("level plan: nx must double from level to level");
            const bool cv = optimizer == Optimizer::quasi_optimal || optimizer == Optimizer::optimal;
            if (cv && levels.size() > 1 && levels[l].samples < 2)
                throw InvalidArgument("level plan: control variates need >= 2 samples per level");
        }
    }

    /// Cost units sum_l M_l (N_l^2 + N_{l-1}^2) with N_0 = 0.
    double workload() const
    {
        double w = 0.0;
        for (std::size_t l = 0; l < levels.size(); ++l)
        {
            const double nf = levels[l].nx;
            const double nc = l == 0 ? 0.0 : levels[l - 1].nx;
            w += static_cast<double>(levels[l].samples) * (nf * nf + nc * nc);
        }
        return w;
    }
};

// ---------------------------------------------------------------------------
// mesh transfer

/// Piecewise-linear prolongation of cell averages on nx cells to 2^k nx cells.
inline std::vector<double> prolong(const std::vector<double>& coarse, std::size_t fine_nx)
{
    const std::size_t nc = coarse.size();
    if (nc == 0 || fine_nx < nc || fine_nx % nc != 0)
        throw InvalidArgument("prolong: non-nested sizes " + std::to_string(nc) + " -> "
                              + std::to_string(fine_nx));
    const std::size_t ratio = fine_nx / nc;
    if ((ratio & (ratio - 1)) != 0)
        throw InvalidArgument("prolong: refinement ratio must be a power of two");
    if (ratio == 1)
        return coarse;
    std::vector<double> fine(fine_nx);
    if (nc == 1)
    {
        std::fill(fine.begin(), fine.end(), coarse[0]);
        return fine;
    }
    // coarse centres at (c + 1/2) H, fine centres at (f + 1/2) H / ratio
    for (std::size_t f = 0; f < fine_nx; ++f)
    {
        const double s = (static_cast<double>(f) + 0.5) / static_cast<double>(ratio) - 0.5;
        std::size_t c = s <= 0.0 ? 0 : static_cast<std::size_t>(s);
        c = std::min(c, nc - 2);
        const double w = s - static_cast<double>(c);
        fine[f] = (1.0 - w) * coarse[c] + w * coarse[c + 1];
    }
    return fine;
}

/// Conservative restriction: averages of 2^k consecutive cells.
inline std::vector<double> restrict_average(const std::vector<double>& fine, std::size_t coarse_nx)
{
    const std::size_t nf = fine.size();
    if (coarse_nx == 0 || nf < coarse_nx || nf % coarse_nx != 0)
        throw InvalidArgument("restrict: non-nested sizes " + std::to_string(nf) + " -> "
                              + std::to_string(coarse_nx));
    const std::size_t ratio = nf / coarse_nx;
    std::vector<double> out(coarse_nx);
    for (std::size_t c = 0; c < coarse_nx; ++c)
    {
        double s = 0.0;
        for (std::size_t r = 0; r < ratio; ++r)
            s += fine[c * ratio + r];
        out[c] = s / static_cast<double>(ratio);
    }
    return out;
}

// ---------------------------------------------------------------------------
// samples and statistics

/// Level-l fine and coarse samples of one quantity, both already on the finest mesh.
struct LevelPairs
{
    int samples() const { return static_cast<int>(fine.size()); }
    SampleMatrix fine;
    SampleMatrix coarse; // empty at the first level (coarse term is zero)
};

struct PairedSamples
{
    std::size_t cells = 0;
    std::vector<LevelPairs> levels;

    void validate() const
    {
        if (levels.empty())
            throw InvalidArgument("paired samples: no levels");
        for (std::size_t l = 0; l < levels.size(); ++l)
        {
            const auto& lv = levels[l];
            if (lv.fine.empty())
                throw InvalidArgument("paired samples: empty level " + std::to_string(l + 1));
            if (l > 0 && lv.coarse.size() != lv.fine.size())
                throw InvalidArgument("paired samples: fine/coarse counts differ at level "
                                      + std::to_string(l + 1));
            for (const auto& v : lv.fine)
                if (v.size() != cells)
                    throw InvalidArgument("paired samples: field length mismatch");
            for (const auto& v : lv.coarse)
                if (v.size() != cells)
                    throw InvalidArgument("paired samples: field length mismatch");
        }
    }

    /// Same structure with every sample value squared.
    PairedSamples squared() const
    {
        PairedSamples out = *this;
        for (auto& lv : out.levels)
        {
            for (auto& v : lv.fine)
                for (double& x : v)
                    x *= x;
            for (auto& v : lv.coarse)
                for (double& x : v)
                    x *= x;
        }
        return out;
    }
};

struct MeanVariance
{
    std::vector<double> mean;
    std::vector<double> variance;
};

/// Plain Monte Carlo with population variance (1/M) sum q^2 - mean^2.
inline MeanVariance mc_estimate(const SampleMatrix& q)
{
    if (q.empty())
        throw InvalidArgument("mc_estimate: no samples");
    const std::size_t n = q.front().size();
    const double inv_m = 1.0 / static_cast<double>(q.size());
    MeanVariance out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<double> sq(n, 0.0);
    for (const auto& v : q)
    {
        if (v.size() != n)
            throw InvalidArgument("mc_estimate: field length mismatch");
        for (std::size_t c = 0; c < n; ++c)
        {
            out.mean[c] += v[c];
            sq[c] += v[c] * v[c];
        }
    }
    for (std::size_t c = 0; c < n; ++c)
    {
        out.mean[c] *= inv_m;
        out.variance[c] = sq[c] * inv_m - out.mean[c] * out.mean[c];
    }
    return out;
}

namespace detail {

struct PairStats
{
    double mean_a = 0.0, mean_b = 0.0, var_a = 0.0, var_b = 0.0, cov = 0.0;
};

// Two-pass population statistics of (a[i][c], b[i][c]) at one cell, shifted by
// the first sample so constant data give exactly zero (co)variance.
inline PairStats pair_stats(const SampleMatrix& a, const SampleMatrix& b, std::size_t c)
{
    PairStats s;
    const std::size_t m = a.size();
    const double inv = 1.0 / static_cast<double>(m);
    const double ka = a[0][c], kb = b[0][c];
    double da_sum = 0.0, db_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
    {
        da_sum += a[i][c] - ka;
        db_sum += b[i][c] - kb;
    }
    const double sa = da_sum * inv, sb = db_sum * inv;
    for (std::size_t i = 0; i < m; ++i)
    {
        const double da = (a[i][c] - ka) - sa;
        const double db = (b[i][c] - kb) - sb;
        s.var_a += da * da;
        s.var_b += db * db;
        s.cov += da * db;
    }
    s.mean_a = ka + sa;
    s.mean_b = kb + sb;
    s.var_a *= inv;
    s.var_b *= inv;
    s.cov *= inv;
    return s;
}

inline double variance_at(const SampleMatrix& a, std::size_t c)
{
    return pair_stats(a, a, c).var_a;
}

inline bool degenerate_variance(double var, double mean)
{
    return !(var >= 1e-14 * (mean * mean + 1e-14));
}

} // namespace detail

/**
 * @brief Per-cell control-variate multipliers.
 *
 * lambda[l][c] holds lambda_{l+1}, l = 0 .. L-1, with lambda_L = 1;
 * hat[l][c] = prod_{i >= l} lambda[i][c].
 */
struct Multipliers
{
    std::vector<std::vector<double>> lambda;
    std::vector<std::vector<double>> hat;
    long degenerate_cells = 0;
    long optimal_fallbacks = 0;
    double max_residual = 0.0;

    static Multipliers ones(std::size_t levels, std::size_t cells)
    {
        Multipliers m;
        m.lambda.assign(levels, std::vector<double>(cells, 1.0));
        m.hat.assign(levels, std::vector<double>(cells, 1.0));
        return m;
    }

    void update_hat()
    {
        const std::size_t nl = lambda.size();
        hat = lambda;
        for (std::size_t l = nl - 1; l-- > 0;)
            for (std::size_t c = 0; c < hat[l].size(); ++c)
                hat[l][c] = lambda[l][c] * hat[l + 1][c];
    }
};

/// lambda_{l-1} = Cov[q_l, q_{l-1}] / V[q_{l-1}] from the level-l pairs.
inline Multipliers quasi_optimal_lambdas(const PairedSamples& ps)
{
    ps.validate();
    const std::size_t nl = ps.levels.size();
    Multipliers mu = Multipliers::ones(nl, ps.cells);
    for (std::size_t l = 1; l < nl; ++l)
    {
        const auto& lv = ps.levels[l];
        if (lv.samples() < 2)
            throw InvalidArgument("quasi_optimal_lambdas: level " + std::to_string(l + 1)
                                  + " needs >= 2 samples");
        for (std::size_t c = 0; c < ps.cells; ++c)
        {
            const auto st = detail::pair_stats(lv.fine, lv.coarse, c);
            if (detail::degenerate_variance(st.var_b, st.mean_b))
            {
                mu.lambda[l - 1][c] = 1.0;
                ++mu.degenerate_cells;
            }
            else
                mu.lambda[l - 1][c] = st.cov / st.var_b;
        }
    }
    mu.update_hat();
    return mu;
}

/**
 * @brief Residual of the tridiagonal optimality system at one cell. V holds
 * the variance of every level and cov[l] = Cov[q_{l+2}, q_{l+1}]; each row is
 * scaled by the sum of its term magnitudes with |Cov| bounded by sqrt(V V).
 */
inline double optimal_system_residual(const std::vector<double>& hat, const std::vector<double>& V,
                                      const std::vector<double>& cov, const std::vector<int>& M)
{
    const std::size_t nl = hat.size();
    double worst = 0.0;
    for (std::size_t l = 0; l + 1 < nl; ++l)
    {
        const double ml = M[l], mn = M[l + 1];
        const double wl = ml / (ml + mn), wp = mn / (ml + mn);
        const double t0 = hat[l] * V[l];
        const double t1 = hat[l + 1] * wl * cov[l];
        const double t2 = l == 0 ? 0.0 : hat[l - 1] * wp * cov[l - 1];
        double scale = std::abs(hat[l]) * V[l] + std::abs(hat[l + 1]) * wl * std::sqrt(V[l] * V[l + 1]);
        if (l > 0)
            scale += std::abs(hat[l - 1]) * wp * std::sqrt(V[l - 1] * V[l]);
        scale = std::max(scale, 1e-300);
        worst = std::max(worst, std::abs(t0 - t1 - t2) / scale);
    }
    return worst;
}

/**
 * @brief Multipliers minimising the total variance of the CV estimator under
 * level independence, by forward substitution
 *   lambda_l (V_l - lambda_{l-1} M_{l+1}/(M_l+M_{l+1}) Cov_{l-1}) = M_l/(M_l+M_{l+1}) Cov_l.
 *
 * V_l comes from the level-l fine samples and Cov_l = Cov[q_{l+1}, q_l] from
 * the level-(l+1) pairs. Cells with a degenerate denominator take the
 * quasi-optimal values.
 */
inline Multipliers optimal_lambdas(const PairedSamples& ps)
{
    ps.validate();
    const std::size_t nl = ps.levels.size();
    Multipliers mu = Multipliers::ones(nl, ps.cells);
    if (nl == 1)
        return mu;
    const Multipliers quasi = quasi_optimal_lambdas(ps);
    mu.degenerate_cells = quasi.degenerate_cells;

    std::vector<int> M(nl);
    for (std::size_t l = 0; l < nl; ++l)
    {
        M[l] = ps.levels[l].samples();
        if (M[l] < 2)
            throw InvalidArgument("optimal_lambdas: level " + std::to_string(l + 1)
                                  + " needs >= 2 samples");
    }

    std::vector<double> V(nl), cov(nl - 1), lam(nl), hat(nl);
    for (std::size_t c = 0; c < ps.cells; ++c)
    {
        bool fallback = false;
        for (std::size_t l = 0; l + 1 < nl; ++l)
        {
            const auto fs = detail::pair_stats(ps.levels[l].fine, ps.levels[l].fine, c);
            const auto st = detail::pair_stats(ps.levels[l + 1].fine, ps.levels[l + 1].coarse, c);
            V[l] = fs.var_a;
            cov[l] = st.cov;
            if (detail::degenerate_variance(V[l], fs.mean_a))
                fallback = true;
        }
        V[nl - 1] = detail::variance_at(ps.levels[nl - 1].fine, c);
        lam[nl - 1] = 1.0;
        for (std::size_t l = 0; l + 1 < nl && !fallback; ++l)
        {
            const double ml = M[l], mn = M[l + 1];
            double denom = V[l];
            if (l > 0)
                denom -= lam[l - 1] * mn / (ml + mn) * cov[l - 1];
            if (!(std::abs(denom) > 1e-12 * V[l]))
            {
                fallback = true;
                break;
            }
            lam[l] = ml / (ml + mn) * cov[l] / denom;
        }
        if (fallback)
        {
            for (std::size_t l = 0; l < nl; ++l)
                lam[l] = quasi.lambda[l][c];
            ++mu.optimal_fallbacks;
        }
        hat[nl - 1] = 1.0;
        for (std::size_t l = nl - 1; l-- > 0;)
            hat[l] = lam[l] * hat[l + 1];
        for (std::size_t l = 0; l < nl; ++l)
            mu.lambda[l][c] = lam[l];
        if (!fallback)
            mu.max_residual = std::max(mu.max_residual, optimal_system_residual(hat, V, cov, M));
    }
    mu.update_hat();
    return mu;
}

/// Telescoped mean  sum_l hat_l E_{M_l}[q_l - lambda_{l-1} q_{l-1}]  (all ones = standard MLMC).
inline std::vector<double> telescoped_mean(const PairedSamples& ps, const Multipliers& mu)
{
    const std::size_t nl = ps.levels.size();
    if (mu.lambda.size() != nl || mu.hat.size() != nl)
        throw InvalidArgument("telescoped_mean: multiplier levels do not match samples");
    std::vector<double> out(ps.cells, 0.0);
    std::vector<double> acc(ps.cells);
    for (std::size_t l = 0; l < nl; ++l)
    {
        const auto& lv = ps.levels[l];
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < lv.fine.size(); ++i)
        {
            const auto& f = lv.fine[i];
            if (l == 0)
                for (std::size_t c = 0; c < ps.cells; ++c)
                    acc[c] += f[c];
            else
            {
                const auto& g = lv.coarse[i];
                const auto& lam = mu.lambda[l - 1];
                for (std::size_t c = 0; c < ps.cells; ++c)
                    acc[c] += f[c] - lam[c] * g[c];
            }
        }
        const double inv = 1.0 / static_cast<double>(lv.fine.size());
        for (std::size_t c = 0; c < ps.cells; ++c)
            out[c] += mu.hat[l][c] * (acc[c] * inv);
    }
    return out;
}

struct EstimatorField
{
    std::vector<double> mean;
    std::vector<double> variance;
    Multipliers multipliers;        // for the mean
    Multipliers square_multipliers; // for E[q^2]
    long clamped_variance = 0;
};

inline Multipliers multipliers_for(const PairedSamples& ps, Optimizer opt)
{
    switch (opt)
    {
    case Optimizer::none:
    case Optimizer::standard: return Multipliers::ones(ps.levels.size(), ps.cells);
    case Optimizer::quasi_optimal: return quasi_optimal_lambdas(ps);
    case Optimizer::optimal: return optimal_lambdas(ps);
    }
    throw InvalidArgument("multipliers_for: unknown optimizer");
}

/**
 * @brief MLMC estimate of E[q] and V[q] = E[q^2] - E[q]^2 on the finest mesh.
 *
 * Without multipliers this is standard MLMC; the E[q^2] telescope uses
 * @p square_mu, computed from the squared samples in CV modes.
 */
inline EstimatorField mlmc_estimate(const PairedSamples& ps,
                                    const std::optional<Multipliers>& mu = std::nullopt,
                                    const std::optional<Multipliers>& square_mu = std::nullopt)
{
    ps.validate();
    if (mu.has_value() != square_mu.has_value())
        throw InvalidArgument("mlmc_estimate: CV mode needs multipliers for both q and q^2");
    const std::size_t nl = ps.levels.size();
    EstimatorField ef;
    ef.multipliers = mu.value_or(Multipliers::ones(nl, ps.cells));
    ef.square_multipliers = square_mu.value_or(Multipliers::ones(nl, ps.cells));
    ef.mean = telescoped_mean(ps, ef.multipliers);
    const auto second = telescoped_mean(ps.squared(), ef.square_multipliers);
    ef.variance.resize(ps.cells);
    for (std::size_t c = 0; c < ps.cells; ++c)
    {
        double v = second[c] - ef.mean[c] * ef.mean[c];
        if (v < 0.0)
        {
            ++ef.clamped_variance;
            v = 0.0;
        }
        ef.variance[c] = v;
    }
    return ef;
}

inline EstimatorField estimate(const PairedSamples& ps, Optimizer opt)
{
    if (opt == Optimizer::standard || opt == Optimizer::none)
        return mlmc_estimate(ps);
    const PairedSamples sq = ps.squared();
    return mlmc_estimate(ps, multipliers_for(ps, opt), multipliers_for(sq, opt));
}

} // namespace bgkmc
