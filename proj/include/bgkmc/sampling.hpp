#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "estimators.hpp"
#include "quadrature.hpp"
#include "random_inputs.hpp"
#include "sample_farm.hpp"
#include "solver.hpp"

namespace bgkmc {

enum class Quantity { rho = 0, U = 1, T = 2 };

inline constexpr std::array<Quantity, 3> kQuantities{Quantity::rho, Quantity::U, Quantity::T};

inline std::string_view to_string(Quantity q)
{
    switch (q)
    {
    case Quantity::rho: return "rho";
    case Quantity::U: return "U";
    case Quantity::T: return "T";
    }
    return "?";
}

inline Quantity parse_quantity(std::string_view s)
{
    for (Quantity q : kQuantities)
        if (s == to_string(q))
            return q;
    throw InvalidArgument("unknown quantity '" + std::string(s) + "'");
}

inline const std::vector<double>& field_of(const MacroFields& f, Quantity q)
{
    switch (q)
    {
    case Quantity::rho: return f.rho;
    case Quantity::U: return f.U;
    case Quantity::T: return f.T;
    }
    return f.rho;
}

/// Velocity grid and solver settings shared by every sample of a run.
struct SolverSetup
{
    int nv = 40;
    double half_width = 5.0;
    SolverConfig solver{};
    std::optional<double> epsilon; // overrides the scenario value

    VelocityGrid grid() const { return build_gauss_legendre(nv, half_width); }

    SolverConfig config_for(const Scenario& sc) const
    {
        SolverConfig c = solver;
        c.epsilon = epsilon.value_or(sc.epsilon);
        return c;
    }
};

/// Solves one sample at z on nx cells up to t_final.
inline SolveResult solve_at(const Scenario& sc, double z, int nx, const VelocityGrid& grid,
                            const SolverSetup& setup, double t_final)
{
    const SpatialMesh mesh = sc.mesh(nx);
    return solve_to_time(initial_state(sc, z, mesh, grid), t_final, grid, mesh, boundary_for(sc, z),
                         setup.config_for(sc));
}

struct ReplicationResult
{
    std::array<EstimatorField, 3> fields;
    std::array<PairedSamples, 3> samples; // kept only when requested
};

struct RunResult
{
    LevelPlan plan;
    std::uint64_t seed = 0;
    double final_time = 0.0;
    std::vector<double> x; // finest-mesh cell centres
    std::vector<ReplicationResult> replications;
    SolverDiagnostics diagnostics;
    long solves = 0;

    double workload_per_replication() const { return plan.workload(); }
    double workload_total() const { return plan.workload() * plan.replications; }
};

struct RunOptions
{
    unsigned threads = 0;
    std::optional<double> final_time;
    bool keep_samples = false;
};

/**
 * @brief Runs the level plan: for every replication k, level l and sample i
 * draws z from (seed, l, i, k), solves on mesh l and mesh l-1, and assembles
 * the estimator with multipliers estimated from the same samples.
 *
 * Deterministic in (scenario, plan, seed, setup) for any thread count.
 */
inline RunResult run_plan(const Scenario& sc, const LevelPlan& plan, std::uint64_t seed,
                          const SolverSetup& setup, const RunOptions& opts = {})
{
    plan.validate();
    const VelocityGrid grid = setup.grid();
    const double t_final = opts.final_time.value_or(sc.final_time);
    const int nl = static_cast<int>(plan.levels.size());
    const int finest = plan.finest_nx();

    struct Task
    {
        int rep, level;
        long sample;
    };
    std::vector<Task> tasks;
    for (int k = 0; k < plan.replications; ++k)
        for (int l = 0; l < nl; ++l)
            for (long i = 0; i < plan.levels[l].samples; ++i)
                tasks.push_back({k, l, i});

    struct Output
    {
        std::array<std::vector<double>, 3> fine, coarse;
        SolverDiagnostics diag;
    };

    auto work = [&](std::size_t idx) -> Output {
        const Task& t = tasks[idx];
        const double z = draw_z({seed, static_cast<std::uint64_t>(t.level + 1),
                                 static_cast<std::uint64_t>(t.sample),
                                 static_cast<std::uint64_t>(t.rep)});
        Output out;
        try
        {
            auto f = solve_at(sc, z, plan.levels[t.level].nx, grid, setup, t_final);
            const MacroFields mf = macro_fields(f.moments);
            out.diag = f.diagnostics;
            for (Quantity q : kQuantities)
                out.fine[static_cast<int>(q)] = prolong(field_of(mf, q), finest);
            if (t.level > 0)
            {
                auto c = solve_at(sc, z, plan.levels[t.level - 1].nx, grid, setup, t_final);
                const MacroFields mc = macro_fields(c.moments);
                out.diag.merge(c.diagnostics);
                for (Quantity q : kQuantities)
                    out.coarse[static_cast<int>(q)] = prolong(field_of(mc, q), finest);
            }
        }
        catch (const Error& e)
        {
            throw SampleFailure("level " + std::to_string(t.level + 1) + ", sample "
                                    + std::to_string(t.sample) + ", replication "
                                    + std::to_string(t.rep) + " (z=" + std::to_string(z)
                                    + "): " + e.what(),
                                t.level + 1, t.sample, t.rep);
        }
        return out;
    };
    std::vector<Output> outputs = parallel_map(tasks.size(), opts.threads, work);

    RunResult res;
    res.plan = plan;
    res.seed = seed;
    res.final_time = t_final;
    const SpatialMesh fm = sc.mesh(finest);
    for (int j = 0; j < finest; ++j)
        res.x.push_back(fm.center(j));

    std::size_t pos = 0;
    for (int k = 0; k < plan.replications; ++k)
    {
        ReplicationResult rr;
        std::array<PairedSamples, 3> ps;
        for (auto& p : ps)
        {
            p.cells = static_cast<std::size_t>(finest);
            p.levels.resize(nl);
        }
        for (int l = 0; l < nl; ++l)
            for (long i = 0; i < plan.levels[l].samples; ++i, ++pos)
            {
                Output& o = outputs[pos];
                res.diagnostics.merge(o.diag);
                res.solves += l > 0 ? 2 : 1;
                for (int q = 0; q < 3; ++q)
                {
                    ps[q].levels[l].fine.push_back(std::move(o.fine[q]));
                    if (l > 0)
                        ps[q].levels[l].coarse.push_back(std::move(o.coarse[q]));
                }
            }
        for (int q = 0; q < 3; ++q)
            rr.fields[q] = estimate(ps[q], plan.optimizer);
        if (opts.keep_samples)
            rr.samples = std::move(ps);
        res.replications.push_back(std::move(rr));
    }
    return res;
}

} // namespace bgkmc
