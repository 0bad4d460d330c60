// bgkmc: run, compare and sweep uncertainty-quantification experiments for the BGK model.

#include <CLI11.hpp>
#include <json.hpp>

#include <bgkmc.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace bgkmc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct RunConfig
{
    std::string scenario;
    std::string mode = "mlmc";
    std::vector<int> levels;
    std::vector<int> samples;
    int replications = 1;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::optional<double> t;
    double z = 0.0;
    int nx = 40;
    int nc = 40;
    int nv = 40;
    double half_width = 5.0;
    double cfl = 0.1;
    std::optional<double> epsilon;
    std::string imex = "pp-imex-4s";
    double newton_tol = 1e-12;
    int newton_max_iter = 50;
    std::string out = "bgkmc-out";
    std::vector<double> snapshots;
    std::string reference;
    std::string matched_reference;
    std::string cache_dir;
    bool no_cache = false;
};

void add_run_options(CLI::App* app, RunConfig& c)
{
    app->add_option("--scenario", c.scenario, "test1 | test2_interface | test2_state | test3");
    app->add_option("--mode", c.mode, "mc | mlmc | cv-quasi | cv-optimal | reference | deterministic")
        ->check(CLI::IsMember({"mc", "mlmc", "cv-quasi", "cv-optimal", "reference", "deterministic"}));
    app->add_option("--levels", c.levels, "mesh sizes per level, doubling")->delimiter(',');
    app->add_option("--samples", c.samples, "samples per level")->delimiter(',');
    app->add_option("-K,--replications", c.replications, "independent replications")->check(CLI::PositiveNumber);
    app->add_option("--seed", c.seed, "global seed");
    app->add_option("--threads", c.threads, "worker threads (0 = all cores)");
    app->add_option("--t", c.t, "final time (default: scenario value)");
    app->add_option("--z", c.z, "random input for deterministic mode")->check(CLI::Range(-1.0, 1.0));
    app->add_option("--nx", c.nx, "cells for deterministic, reference and single-level mc");
    app->add_option("--nc", c.nc, "collocation nodes for reference mode");
    app->add_option("--nv", c.nv, "velocity nodes");
    app->add_option("--R", c.half_width, "velocity half-width");
    app->add_option("--cfl", c.cfl, "dt / dx");
    app->add_option("--epsilon", c.epsilon, "Knudsen number override");
    app->add_option("--imex", c.imex, "IMEX table")->check(CLI::IsMember(imex_table_names()));
    app->add_option("--newton-tol", c.newton_tol, "Newton relative tolerance");
    app->add_option("--newton-max-iter", c.newton_max_iter, "Newton iteration cap");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--snapshots", c.snapshots, "snapshot times (deterministic mode)")->delimiter(',');
    app->add_option("--reference", c.reference, "reference run directory; writes errors.csv");
    app->add_option("--matched-reference", c.matched_reference, "reference on the finest estimator mesh");
    app->add_option("--cache-dir", c.cache_dir, "reference cache directory (default $BGKMC_CACHE_DIR)");
    app->add_flag("--no-cache", c.no_cache, "always recompute collocation references");
}

SolverSetup make_setup(const RunConfig& c)
{
    SolverSetup s;
    s.nv = c.nv;
    s.half_width = c.half_width;
    s.solver.cfl_ratio = c.cfl;
    s.solver.table = imex_table_by_name(c.imex);
    s.solver.newton.tolerance = c.newton_tol;
    s.solver.newton.max_iterations = c.newton_max_iter;
    s.epsilon = c.epsilon;
    s.solver.epsilon = c.epsilon.value_or(1.0);
    s.solver.validate();
    return s;
}

Optimizer optimizer_of(const std::string& mode)
{
    if (mode == "mc")
        return Optimizer::none;
    if (mode == "mlmc")
        return Optimizer::standard;
    if (mode == "cv-quasi")
        return Optimizer::quasi_optimal;
    if (mode == "cv-optimal")
        return Optimizer::optimal;
    throw InvalidArgument("mode '" + mode + "' has no level plan");
}

LevelPlan make_plan(const RunConfig& c)
{
    LevelPlan p;
    p.optimizer = optimizer_of(c.mode);
    p.replications = c.replications;
    std::vector<int> levels = c.levels;
    if (levels.empty() && p.optimizer == Optimizer::none)
        levels = {c.nx};
    if (levels.size() != c.samples.size())
        throw InvalidArgument("--levels and --samples must have the same length");
    for (std::size_t l = 0; l < levels.size(); ++l)
        p.levels.push_back({levels[l], c.samples[l]});
    p.validate();
    return p;
}

json config_json(const RunConfig& c, const Scenario& sc, const SolverSetup& s)
{
    const SolverConfig sv = s.config_for(sc);
    json j;
    j["scenario"] = c.scenario;
    j["mode"] = c.mode;
    j["levels"] = c.levels;
    j["samples"] = c.samples;
    j["replications"] = c.replications;
    j["seed"] = c.seed;
    j["t"] = c.t.value_or(sc.final_time);
    j["z"] = c.z;
    j["nx"] = c.nx;
    j["nc"] = c.nc;
    j["nv"] = c.nv;
    j["R"] = c.half_width;
    j["cfl"] = c.cfl;
    j["epsilon"] = sv.epsilon;
    j["imex"] = sv.table.name;
    j["newton_tol"] = c.newton_tol;
    j["newton_max_iter"] = c.newton_max_iter;
    j["snapshots"] = c.snapshots;
    return j;
}

json diagnostics_json(const SolverDiagnostics& d)
{
    json j;
    j["steps"] = d.steps;
    j["newton_solves"] = d.newton_solves;
    j["newton_iterations"] = d.newton_iterations;
    j["newton_fallbacks"] = d.newton_fallbacks;
    return j;
}

std::optional<fs::path> cache_dir_of(const RunConfig& c)
{
    if (!c.cache_dir.empty())
        return fs::path(c.cache_dir);
    return std::nullopt;
}

ReferenceSolution load_reference_dir(const fs::path& dir)
{
    const FieldTable t = load_fields_csv(dir / "fields.csv");
    std::ifstream in(dir / "meta.json");
    if (!in)
        throw InvalidArgument("reference: missing meta.json in " + dir.string());
    const json meta = json::parse(in);
    ReferenceSolution r;
    r.kind = meta.at("config").at("mode").get<std::string>();
    r.scenario = meta.at("config").at("scenario").get<std::string>();
    r.t = meta.at("config").at("t").get<double>();
    r.nx = static_cast<int>(t.cells());
    for (Quantity q : kQuantities)
    {
        r.x = t.at(q).x;
        r.stats[static_cast<int>(q)] = {t.at(q).mean, t.at(q).variance};
    }
    return r;
}

struct RunFields
{
    std::string scenario;
    double t = 0.0;
    std::vector<double> x;
    std::map<Quantity, std::vector<std::vector<double>>> reps;
};

RunFields load_run_fields(const fs::path& dir)
{
    std::ifstream in(dir / "meta.json");
    if (!in)
        throw InvalidArgument("compare: missing meta.json in " + dir.string());
    const json meta = json::parse(in);
    RunFields rf;
    rf.scenario = meta.at("config").at("scenario").get<std::string>();
    rf.t = meta.at("config").at("t").get<double>();
    std::vector<fs::path> files;
    const int k = meta.at("config").at("replications").get<int>();
    if (k > 1 && fs::exists(dir / "replications"))
        for (int i = 0; i < k; ++i)
        {
            char name[32];
            std::snprintf(name, sizeof name, "fields_%04d.csv", i);
            files.push_back(dir / "replications" / name);
        }
    else
        files.push_back(dir / "fields.csv");
    for (const auto& f : files)
    {
        const FieldTable t = load_fields_csv(f);
        for (Quantity q : kQuantities)
        {
            rf.x = t.at(q).x;
            rf.reps[q].push_back(t.at(q).mean);
        }
    }
    return rf;
}

void check_compatible(const RunFields& run, const ReferenceSolution& ref)
{
    if (parse_scenario(run.scenario) != parse_scenario(ref.scenario))
        throw InvalidArgument("compare: scenario mismatch (" + run.scenario + " vs " + ref.scenario + ")");
    if (std::abs(run.t - ref.t) > 1e-12 * std::max(1.0, std::abs(ref.t)))
        throw InvalidArgument("compare: final time mismatch (" + format_double(run.t) + " vs "
                              + format_double(ref.t) + ")");
    const std::size_t n = run.x.size();
    if (ref.x.size() < n || ref.x.size() % n != 0)
        throw InvalidArgument("compare: reference mesh (" + std::to_string(ref.x.size())
                              + " cells) is not a refinement of the run mesh (" + std::to_string(n) + ")");
}

ErrorReport compare_dirs(const fs::path& run_dir, const fs::path& ref_dir, const std::string& matched_dir)
{
    const RunFields run = load_run_fields(run_dir);
    const ReferenceSolution ref = load_reference_dir(ref_dir);
    check_compatible(run, ref);
    std::optional<ReferenceSolution> matched;
    if (!matched_dir.empty())
    {
        matched = load_reference_dir(matched_dir);
        check_compatible(run, *matched);
        if (matched->x.size() != run.x.size())
            throw InvalidArgument("compare: matched reference must use the run mesh");
    }
    return compute_errors(run.reps, run.x, ref, matched ? &*matched : nullptr);
}

void execute_run(const RunConfig& c)
{
    if (c.scenario.empty())
        throw InvalidArgument("--scenario is required");
    const Scenario sc = Scenario::make(parse_scenario(c.scenario));
    const SolverSetup setup = make_setup(c);
    const double tf = c.t.value_or(sc.final_time);
    const fs::path out(c.out);
    fs::create_directories(out);

    json meta;
    meta["version"] = std::string(kVersion);
    meta["config"] = config_json(c, sc, setup);

    if (c.mode == "deterministic")
    {
        const VelocityGrid grid = setup.grid();
        const SpatialMesh mesh = sc.mesh(c.nx);
        std::vector<double> x;
        for (int j = 0; j < mesh.nx; ++j)
            x.push_back(mesh.center(j));
        auto on_snapshot = [&](const KineticState& s) {
            const MacroFields f = macro_fields(state_moments(grid, s));
            char name[64];
            std::snprintf(name, sizeof name, "t_%.6g.csv", s.t);
            write_file(out / "snapshots" / name, snapshot_csv(x, f));
        };
        const SolveResult r = solve_to_time(initial_state(sc, c.z, mesh, grid), tf, grid, mesh,
                                            boundary_for(sc, c.z), setup.config_for(sc), c.snapshots,
                                            on_snapshot);
        const MacroFields f = macro_fields(r.moments);
        FieldTable t;
        for (Quantity q : kQuantities)
            t.quantities[q] = {x, field_of(f, q), std::vector<double>(x.size(), 0.0), {}};
        write_file(out / "fields.csv", fields_csv(t));
        meta["workload"] = {{"per_replication", static_cast<double>(c.nx) * c.nx}, {"total", static_cast<double>(c.nx) * c.nx}};
        meta["solves"] = 1;
        meta["diagnostics"] = diagnostics_json(r.diagnostics);
    }
    else if (c.mode == "reference")
    {
        const ReferenceSolution ref = c.no_cache
                                          ? collocation_reference(sc, c.nc, c.nx, setup, c.threads, tf)
                                          : cached_collocation_reference(sc, c.nc, c.nx, setup, c.threads, tf,
                                                                         cache_dir_of(c));
        FieldTable t;
        for (Quantity q : kQuantities)
            t.quantities[q] = {ref.x, ref.of(q).mean, ref.of(q).variance, {}};
        write_file(out / "fields.csv", fields_csv(t));
        const double w = static_cast<double>(c.nc) * c.nx * c.nx;
        meta["workload"] = {{"per_replication", w}, {"total", w}};
        meta["solves"] = c.nc;
    }
    else
    {
        const LevelPlan plan = make_plan(c);
        meta["config"]["levels"] = [&] {
            std::vector<int> v;
            for (const auto& l : plan.levels)
                v.push_back(l.nx);
            return v;
        }();
        RunOptions opts;
        opts.threads = c.threads;
        opts.final_time = tf;
        const RunResult run = run_plan(sc, plan, c.seed, setup, opts);
        const bool cv = plan.optimizer == Optimizer::quasi_optimal || plan.optimizer == Optimizer::optimal;
        write_file(out / "fields.csv", fields_csv(field_table(run, 0, cv)));
        if (plan.replications > 1)
            for (int k = 0; k < plan.replications; ++k)
            {
                char name[32];
                std::snprintf(name, sizeof name, "fields_%04d.csv", k);
                write_file(out / "replications" / name, fields_csv(field_table(run, k, cv)));
            }
        meta["workload"] = {{"per_replication", run.workload_per_replication()}, {"total", run.workload_total()}};
        meta["solves"] = run.solves;
        meta["diagnostics"] = diagnostics_json(run.diagnostics);
        long degenerate = 0, fallbacks = 0, clamped = 0;
        double residual = 0.0;
        for (const auto& rep : run.replications)
            for (const auto& ef : rep.fields)
            {
                degenerate += ef.multipliers.degenerate_cells + ef.square_multipliers.degenerate_cells;
                fallbacks += ef.multipliers.optimal_fallbacks + ef.square_multipliers.optimal_fallbacks;
                residual = std::max({residual, ef.multipliers.max_residual, ef.square_multipliers.max_residual});
                clamped += ef.clamped_variance;
            }
        meta["estimator"] = {{"degenerate_variance_cells", degenerate},
                             {"optimal_fallback_cells", fallbacks},
                             {"max_optimal_residual", residual},
                             {"clamped_variance_cells", clamped}};
    }
    write_file(out / "meta.json", meta.dump(2) + "\n");

    if (!c.reference.empty())
        write_file(out / "errors.csv", errors_csv(compare_dirs(out, c.reference, c.matched_reference)));
}

// Cartesian product of "key=v1|v2" specifications.
std::vector<std::vector<std::pair<std::string, std::string>>> expand_sweep(const std::vector<std::string>& vary)
{
    std::vector<std::vector<std::pair<std::string, std::string>>> combos{{}};
    for (const auto& spec : vary)
    {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0)
            throw InvalidArgument("--vary expects key=v1|v2, got '" + spec + "'");
        const std::string key = spec.substr(0, eq);
        std::vector<std::string> values;
        std::string rest = spec.substr(eq + 1);
        for (std::size_t pos; (pos = rest.find('|')) != std::string::npos; rest.erase(0, pos + 1))
            values.push_back(rest.substr(0, pos));
        values.push_back(rest);
        std::vector<std::vector<std::pair<std::string, std::string>>> next;
        for (const auto& c : combos)
            for (const auto& v : values)
            {
                auto e = c;
                e.emplace_back(key, v);
                next.push_back(std::move(e));
            }
        combos = std::move(next);
    }
    return combos;
}

std::string combo_name(const std::vector<std::pair<std::string, std::string>>& combo)
{
    std::string s;
    for (const auto& [k, v] : combo)
        s += (s.empty() ? "" : "__") + k + "-" + v;
    for (char& ch : s)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.'))
            ch = '_';
    return s.empty() ? "base" : s;
}

/// Replaces `--config FILE` by the file's `key = value` lines, placed first so flags override them.
std::vector<std::string> expand_config(std::vector<std::string> args)
{
    std::vector<std::string> files;
    for (std::size_t i = 0; i < args.size();)
    {
        if (args[i] == "--config" && i + 1 < args.size())
        {
            files.push_back(args[i + 1]);
            args.erase(args.begin() + i, args.begin() + i + 2);
        }
        else if (args[i].starts_with("--config="))
        {
            files.push_back(args[i].substr(9));
            args.erase(args.begin() + i);
        }
        else
            ++i;
    }
    std::vector<std::string> out;
    for (const auto& f : files)
    {
        if (!fs::is_regular_file(f))
            throw InvalidArgument("config file not found: " + f);
        for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(f))
        {
            if (item.name == "++" || item.name == "--")
                continue;
            if (!item.parents.empty())
                throw InvalidArgument("config: unexpected section in key '" + item.fullname() + "'");
            std::string value;
            for (const auto& v : item.inputs)
                value += (value.empty() ? "" : ",") + v;
            out.push_back("--" + item.name + "=" + value);
        }
    }
    out.insert(out.end(), args.begin(), args.end());
    return out;
}

RunConfig parse_run_args(const std::vector<std::string>& input)
{
    const std::vector<std::string> args = expand_config(input);
    CLI::App app{"run"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    RunConfig c;
    add_run_options(&app, c);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multilevel Monte Carlo and control-variate estimators for the BGK model"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    RunConfig run_cfg;
    CLI::App* run = app.add_subcommand("run", "run one experiment");
    std::string config_file;
    run->add_option("--config", config_file, "INI file with run options (flags override)");
    add_run_options(run, run_cfg);

    std::string cmp_run, cmp_ref, cmp_matched, cmp_out;
    CLI::App* compare = app.add_subcommand("compare", "error functionals of a run against a reference");
    compare->add_option("run_dir", cmp_run)->required()->check(CLI::ExistingDirectory);
    compare->add_option("reference_dir", cmp_ref)->required()->check(CLI::ExistingDirectory);
    compare->add_option("--matched-reference", cmp_matched)->check(CLI::ExistingDirectory);
    compare->add_option("--out", cmp_out, "errors.csv path (default run_dir/errors.csv)");

    std::vector<std::string> vary;
    std::string sweep_out = "bgkmc-sweep";
    CLI::App* sweep = app.add_subcommand("sweep", "cartesian parameter sweep of run");
    sweep->add_option("--vary", vary, "key=v1|v2 (repeatable)")->required();
    sweep->add_option("--sweep-out", sweep_out, "parent directory of the run directories");
    sweep->allow_extras();

    try
    {
        std::vector<std::string> args(argv + 1, argv + argc);
        if (!args.empty() && args.front() == "run")
        {
            std::vector<std::string> tail = expand_config({args.begin() + 1, args.end()});
            tail.insert(tail.begin(), "run");
            args = std::move(tail);
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    catch (const InvalidArgument& e)
    {
        std::fprintf(stderr, "bgkmc: configuration error: %s\n", e.what());
        return kExitConfig;
    }

    try
    {
        if (*run)
            execute_run(run_cfg);
        else if (*compare)
        {
            const ErrorReport e = compare_dirs(cmp_run, cmp_ref, cmp_matched);
            write_file(cmp_out.empty() ? fs::path(cmp_run) / "errors.csv" : fs::path(cmp_out), errors_csv(e));
            for (Quantity q : kQuantities)
                std::printf("E(%s) = %s\n", std::string(to_string(q)).c_str(), format_double(e.overall(q)).c_str());
        }
        else if (*sweep)
        {
            const std::vector<std::string> base = sweep->remaining();
            for (const auto& combo : expand_sweep(vary))
            {
                std::vector<std::string> args = base;
                for (const auto& [k, v] : combo)
                    args.push_back("--" + k + "=" + v);
                const fs::path dir = fs::path(sweep_out) / combo_name(combo);
                args.push_back("--out=" + dir.string());
                execute_run(parse_run_args(args));
                std::printf("%s\n", dir.string().c_str());
            }
        }
    }
    catch (const CLI::ParseError& e)
    {
        std::fprintf(stderr, "bgkmc: %s\n", e.what());
        return kExitConfig;
    }
    catch (const InvalidArgument& e)
    {
        std::fprintf(stderr, "bgkmc: configuration error: %s\n", e.what());
        return kExitConfig;
    }
    catch (const Error& e)
    {
        std::fprintf(stderr, "bgkmc: numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "bgkmc: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitOk;
}
