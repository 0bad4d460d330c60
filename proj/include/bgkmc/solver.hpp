#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "imex_table.hpp"
#include "maxwellian.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"
#include "transport.hpp"

namespace bgkmc {

/// Cell averages of the reduced distributions, nx rows of nv node values.
struct KineticState
{
    int nx = 0;
    int nv = 0;
    std::vector<double> phi;
    std::vector<double> psi;
    double t = 0.0;

    KineticState() = default;
    KineticState(int nx_, int nv_, double t_ = 0.0)
        : nx(nx_)
        , nv(nv_)
        , phi(static_cast<std::size_t>(nx_) * nv_)
        , psi(static_cast<std::size_t>(nx_) * nv_)
        , t(t_)
    {
    }

    std::span<double> phi_row(int j) { return {phi.data() + static_cast<std::size_t>(j) * nv, static_cast<std::size_t>(nv)}; }
    std::span<double> psi_row(int j) { return {psi.data() + static_cast<std::size_t>(j) * nv, static_cast<std::size_t>(nv)}; }
    std::span<const double> phi_row(int j) const { return {phi.data() + static_cast<std::size_t>(j) * nv, static_cast<std::size_t>(nv)}; }
    std::span<const double> psi_row(int j) const { return {psi.data() + static_cast<std::size_t>(j) * nv, static_cast<std::size_t>(nv)}; }
};

struct SolverConfig
{
    double epsilon = 1.0;
    double cfl_ratio = 0.1;
    ImexTable table = pp_imex_4s();
    NewtonSettings newton;
    /// Record the smallest phi/psi value seen at any stage (costs one extra pass).
    bool track_positivity = false;

    void validate() const
    {
        if (!(epsilon > 0.0))
            throw InvalidArgument("SolverConfig: epsilon must be > 0");
        if (!(cfl_ratio > 0.0 && cfl_ratio <= 1.0))
            throw InvalidArgument("SolverConfig: cfl_ratio must lie in (0, 1]");
        table.validate();
    }
};

struct SolverDiagnostics
{
    long steps = 0;
    long newton_solves = 0;
    long newton_iterations = 0;
    /// Cells where Newton failed and the continuous Maxwellian was used instead.
    long newton_fallbacks = 0;
    double min_phi = std::numeric_limits<double>::infinity();
    double min_psi = std::numeric_limits<double>::infinity();

    void merge(const SolverDiagnostics& o)
    {
        steps += o.steps;
        newton_solves += o.newton_solves;
        newton_iterations += o.newton_iterations;
        newton_fallbacks += o.newton_fallbacks;
        min_phi = std::min(min_phi, o.min_phi);
        min_psi = std::min(min_psi, o.min_psi);
    }
};

/// Per-cell macroscopic fields.
struct MacroFields
{
    std::vector<double> rho, U, T;
};

inline std::vector<Moments> state_moments(const VelocityGrid& grid, const KineticState& s)
{
    std::vector<Moments> out(static_cast<std::size_t>(s.nx));
    for (int j = 0; j < s.nx; ++j)
        out[j] = raw_moments(grid, s.phi_row(j), s.psi_row(j));
    return out;
}

inline MacroFields macro_fields(const std::vector<Moments>& moms)
{
    MacroFields f;
    f.rho.reserve(moms.size());
    f.U.reserve(moms.size());
    f.T.reserve(moms.size());
    for (const auto& m : moms)
    {
        f.rho.push_back(m.rho);
        f.U.push_back(m.U());
        f.T.push_back(m.T());
    }
    return f;
}

/**
 * @brief One-sample deterministic engine: IMEX-RK in time, MUSCL in space.
 *
 * Per stage the moments follow from the explicit transport update alone
 * (relaxation conserves them), the stage Maxwellian comes from a Newton
 * solve, and the implicit relaxation is then diagonal and solved in closed
 * form. The final correction uses M^{n+1} = M^{(nu)}.
 */
class ImexStepper
{
public:
    ImexStepper(const VelocityGrid& grid, const SpatialMesh& mesh, BoundaryPair bc,
                SolverConfig config)
        : grid_(&grid)
        , transport_(grid, mesh, std::move(bc))
        , config_(std::move(config))
    {
        config_.validate();
        const int nu = config_.table.stages;
        const std::size_t n = static_cast<std::size_t>(mesh.nx) * grid.size();
        stage_phi_.assign(nu, std::vector<double>(n));
        stage_psi_.assign(nu, std::vector<double>(n));
        k_phi_.assign(nu, std::vector<double>(n));
        k_psi_.assign(nu, std::vector<double>(n));
        t_phi_.assign(nu, std::vector<double>(n));
        t_psi_.assign(nu, std::vector<double>(n));
        t_mom_.assign(nu, std::vector<Moments>(mesh.nx));
        m_phi_.assign(nu, std::vector<double>(n));
        m_psi_.assign(nu, std::vector<double>(n));
        e_phi_.resize(n);
        e_psi_.resize(n);
        eval_.assign(mesh.nx, MaxwellEval{});
        warm_.assign(mesh.nx, false);
        m_cache_.resize(n);
        scratch_.resize(grid.size());

        // a stage whose explicit row repeats an earlier one has the same moments
        reuse_.assign(nu, -1);
        for (int i = 1; i < nu; ++i)
            for (int r = 0; r < i && reuse_[i] < 0; ++r)
            {
                bool same = true;
                for (int j = 0; j < nu; ++j)
                    same = same && config_.table.at(i, j) == config_.table.at(r, j);
                if (same)
                    reuse_[i] = reuse_[r] >= 0 ? reuse_[r] : r;
            }
        needs_transport_.assign(nu, false);
        for (int j = 0; j < nu; ++j)
            for (int i = j + 1; i < nu; ++i)
                if (config_.table.at(i, j) != 0.0)
                    needs_transport_[j] = true;
    }

    const SpatialMesh& mesh() const { return transport_.mesh(); }
    const SolverConfig& config() const { return config_; }
    const SolverDiagnostics& diagnostics() const { return diag_; }
    double time_step() const { return config_.cfl_ratio * mesh().dx(); }

    /// Advances @p s by dt in place.
    void step(KineticState& s, double dt)
    {
        const ImexTable& tab = config_.table;
        const int nu = tab.stages;
        const int nx = mesh().nx;
        const int nv = static_cast<int>(grid_->size());
        const std::size_t n = s.phi.size();
        const double z = dt / config_.epsilon;

        std::vector<Moments>& mom0 = mom0_;
        mom0.resize(nx);
        for (int j = 0; j < nx; ++j)
            mom0[j] = raw_moments(*grid_, s.phi_row(j), s.psi_row(j));

        for (int i = 0; i < nu; ++i)
        {
            terms_.clear();
            for (int j = 0; j < i; ++j)
            {
                const double ex = dt * tab.at(i, j);
                const double im = tab.a(i, j);
                if (ex != 0.0)
                    terms_.push_back({-ex, t_phi_[j].data(), t_psi_[j].data()});
                if (im != 0.0)
                    terms_.push_back({im, k_phi_[j].data(), k_psi_[j].data()});
            }
            combine(s.phi.data(), s.psi.data(), n);

            const int src = reuse_[i];
            std::vector<double>& mphi = src >= 0 ? m_phi_[src] : m_phi_[i];
            std::vector<double>& mpsi = src >= 0 ? m_psi_[src] : m_psi_[i];
            if (src < 0)
                stage_maxwellians(i, dt, s.t, mom0, mphi, mpsi);

            const double d = tab.a(i, i) * z;
            const double inv = 1.0 / (1.0 + d);
            auto& sp = stage_phi_[i];
            auto& ss = stage_psi_[i];
            auto& kp = k_phi_[i];
            auto& ks = k_psi_[i];
            for (std::size_t q = 0; q < n; ++q)
            {
                sp[q] = (e_phi_[q] + d * mphi[q]) * inv;
                ss[q] = (e_psi_[q] + d * mpsi[q]) * inv;
                kp[q] = z * (mphi[q] - e_phi_[q]) * inv;
                ks[q] = z * (mpsi[q] - e_psi_[q]) * inv;
            }
            if (config_.track_positivity)
                track(sp, ss);

            if (needs_transport_[i])
            {
                const double ts = s.t + tab.explicit_node(i) * dt;
                transport_.apply(sp, ss, ts, t_phi_[i], t_psi_[i]);
                for (int j = 0; j < nx; ++j)
                {
                    const std::size_t off = static_cast<std::size_t>(j) * nv;
                    t_mom_[i][j] = raw_moments(*grid_, {t_phi_[i].data() + off, static_cast<std::size_t>(nv)},
                                               {t_psi_[i].data() + off, static_cast<std::size_t>(nv)});
                }
            }
        }

        const int last = nu - 1;
        const int msrc = reuse_[last] >= 0 ? reuse_[last] : last;
        const auto& fp = stage_phi_[last];
        const auto& fs = stage_psi_[last];
        if (tab.alpha > 0.0)
        {
            const double g = tab.alpha * z * z;
            const double inv = 1.0 / (1.0 + g);
            const auto& mp = m_phi_[msrc];
            const auto& ms = m_psi_[msrc];
            for (std::size_t q = 0; q < n; ++q)
            {
                s.phi[q] = (fp[q] + g * mp[q]) * inv;
                s.psi[q] = (fs[q] + g * ms[q]) * inv;
            }
        }
        else
        {
            std::copy(fp.begin(), fp.end(), s.phi.begin());
            std::copy(fs.begin(), fs.end(), s.psi.begin());
        }
        if (config_.track_positivity)
            track(s.phi, s.psi);
        s.t += dt;
        ++diag_.steps;
    }

private:
    struct Term
    {
        double c;
        const double* phi;
        const double* psi;
    };

    // e = s + sum of c * x over the stage terms, accumulated in term order
    void combine(const double* sp, const double* ss, std::size_t n)
    {
        double* ep = e_phi_.data();
        double* es = e_psi_.data();
        const Term* t = terms_.data();
        switch (terms_.size())
        {
        case 0:
            std::copy_n(sp, n, ep);
            std::copy_n(ss, n, es);
            return;
        case 1:
            for (std::size_t q = 0; q < n; ++q)
            {
                ep[q] = sp[q] + t[0].c * t[0].phi[q];
                es[q] = ss[q] + t[0].c * t[0].psi[q];
            }
            return;
        case 2:
            for (std::size_t q = 0; q < n; ++q)
            {
                ep[q] = sp[q] + t[0].c * t[0].phi[q] + t[1].c * t[1].phi[q];
                es[q] = ss[q] + t[0].c * t[0].psi[q] + t[1].c * t[1].psi[q];
            }
            return;
        default:
            for (std::size_t q = 0; q < n; ++q)
            {
                ep[q] = sp[q] + t[0].c * t[0].phi[q] + t[1].c * t[1].phi[q] + t[2].c * t[2].phi[q];
                es[q] = ss[q] + t[0].c * t[0].psi[q] + t[1].c * t[1].psi[q] + t[2].c * t[2].psi[q];
            }
            for (std::size_t j = 3; j < terms_.size(); ++j)
                for (std::size_t q = 0; q < n; ++q)
                {
                    ep[q] += t[j].c * t[j].phi[q];
                    es[q] += t[j].c * t[j].psi[q];
                }
        }
    }

    void track(const std::vector<double>& p, const std::vector<double>& s)
    {
        for (double v : p)
            diag_.min_phi = std::min(diag_.min_phi, v);
        for (double v : s)
            diag_.min_psi = std::min(diag_.min_psi, v);
    }

    void stage_maxwellians(int i, double dt, double t, const std::vector<Moments>& mom0,
                           std::vector<double>& mphi, std::vector<double>& mpsi)
    {
        const ImexTable& tab = config_.table;
        const int nx = mesh().nx;
        const std::size_t nv = grid_->size();
        for (int j = 0; j < nx; ++j)
        {
            Moments target = mom0[j];
            for (int l = 0; l < i; ++l)
            {
                const double c = dt * tab.at(i, l);
                if (c == 0.0)
                    continue;
                target.rho -= c * t_mom_[l][j].rho;
                target.m -= c * t_mom_[l][j].m;
                target.E -= c * t_mom_[l][j].E;
            }
            const double T = target.T();
            if (!(target.rho > 0.0) || !(T > 0.0) || !std::isfinite(target.E))
                throw DegenerateState("imex step: degenerate moments in cell " + std::to_string(j)
                                          + " at stage " + std::to_string(i + 1) + ", t="
                                          + std::to_string(t) + " (rho=" + std::to_string(target.rho)
                                          + ", T=" + std::to_string(T) + ")",
                                      j);
            std::span<double> mp(mphi.data() + j * nv, nv);
            std::span<double> ms(mpsi.data() + j * nv, nv);
            NewtonReport rep;
            try
            {
                std::span<double> cached(m_cache_.data() + j * nv, nv);
                if (!warm_[j])
                {
                    eval_[j].params = MaxwellParams::continuous(target.rho, target.U(), T);
                    eval_[j].sums = detail::maxwell_sums(*grid_, eval_[j].params, cached);
                    warm_[j] = true;
                }
                newton_maxwellian(*grid_, target, eval_[j], cached, scratch_, config_.newton, &rep);
                const double c = -1.0 / (2.0 * eval_[j].params.alpha3);
                for (std::size_t k = 0; k < nv; ++k)
                {
                    mp[k] = cached[k];
                    ms[k] = c * mp[k];
                }
            }
            catch (const ConvergenceFailure&)
            {
                ++diag_.newton_fallbacks;
                warm_[j] = false;
                continuous_maxwellian_into(*grid_, target.rho, target.U(), T, mp, ms);
            }
            ++diag_.newton_solves;
            diag_.newton_iterations += rep.iterations;
        }
    }

    const VelocityGrid* grid_;
    TransportOperator transport_;
    SolverConfig config_;
    SolverDiagnostics diag_;
    std::vector<int> reuse_;
    std::vector<Term> terms_;
    std::vector<bool> needs_transport_;
    std::vector<std::vector<double>> stage_phi_, stage_psi_, k_phi_, k_psi_, t_phi_, t_psi_, m_phi_, m_psi_;
    std::vector<std::vector<Moments>> t_mom_;
    std::vector<Moments> mom0_;
    std::vector<double> e_phi_, e_psi_, scratch_;
    // last converged Maxwellian per cell with its sums, reused as the next start
    std::vector<MaxwellEval> eval_;
    std::vector<bool> warm_;
    std::vector<double> m_cache_;
};

/// Single-step convenience wrapper around ImexStepper.
inline KineticState imex_step(const KineticState& state, const SolverConfig& config,
                              const VelocityGrid& grid, const SpatialMesh& mesh,
                              const BoundaryPair& bc, std::optional<double> dt = std::nullopt)
{
    ImexStepper stepper(grid, mesh, bc, config);
    KineticState next = state;
    stepper.step(next, dt.value_or(stepper.time_step()));
    return next;
}

struct SolveResult
{
    KineticState state;
    std::vector<Moments> moments;
    SolverDiagnostics diagnostics;
};

/// Called at each requested output time with the state at exactly that time.
using SnapshotCallback = std::function<void(const KineticState&)>;

/**
 * @brief Integrates with dt = cfl_ratio * dx, shortening the last step of
 * each segment so every snapshot time and @p t_final are hit exactly.
 */
inline SolveResult solve_to_time(KineticState initial, double t_final, const VelocityGrid& grid,
                                 const SpatialMesh& mesh, const BoundaryPair& bc,
                                 const SolverConfig& config,
                                 std::span<const double> snapshot_times = {},
                                 const SnapshotCallback& on_snapshot = {})
{
    if (!(t_final >= initial.t))
        throw InvalidArgument("solve_to_time: final time precedes the initial time");
    if (initial.nx != mesh.nx || initial.nv != static_cast<int>(grid.size()))
        throw InvalidArgument("solve_to_time: state shape does not match mesh and grid");

    ImexStepper stepper(grid, mesh, bc, config);
    const double dt = stepper.time_step();

    std::vector<double> stops;
    for (double ts : snapshot_times)
        if (ts > initial.t && ts < t_final)
            stops.push_back(ts);
    std::sort(stops.begin(), stops.end());
    stops.push_back(t_final);

    KineticState s = std::move(initial);
    for (double ts : snapshot_times)
        if (ts == s.t && on_snapshot)
            on_snapshot(s);
    for (double stop : stops)
    {
        const double t0 = s.t;
        const double span = stop - t0;
        if (span > 0.0)
        {
            const auto nsteps = static_cast<long>(std::ceil(span / dt * (1.0 - 1e-12)));
            for (long i = 0; i < nsteps; ++i)
            {
                const double h = (i + 1 == nsteps) ? stop - (t0 + i * dt) : dt;
                stepper.step(s, h);
                s.t = (i + 1 == nsteps) ? stop : t0 + (i + 1) * dt;
            }
        }
        if (on_snapshot
            && std::find(snapshot_times.begin(), snapshot_times.end(), stop) != snapshot_times.end())
            on_snapshot(s);
    }
    SolveResult r;
    r.moments = state_moments(grid, s);
    r.state = std::move(s);
    r.diagnostics = stepper.diagnostics();
    return r;
}

} // namespace bgkmc
