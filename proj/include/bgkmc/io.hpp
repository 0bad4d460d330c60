#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "reference.hpp"
#include "sampling.hpp"

namespace bgkmc {

inline constexpr std::string_view kVersion = "1.0.0";

/// Fixed 17-significant-digit rendering used by every CSV writer.
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ','))
        out.push_back(cur);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& what)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw InvalidArgument("csv: cannot parse " + what + " '" + s + "'");
    return v;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw InvalidArgument("cannot open " + p.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!line.empty())
            lines.push_back(line);
    return lines;
}

inline void write_text(const std::filesystem::path& p, const std::string& text)
{
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw InvalidArgument("cannot write " + p.string());
    out << text;
}

} // namespace detail

// ---------------------------------------------------------------------------
// fields.csv

/// One quantity's per-cell table as stored in fields.csv.
struct FieldColumns
{
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<std::vector<double>> lambda; // lambda_1 .. lambda_L, empty outside CV modes
};

struct FieldTable
{
    std::map<Quantity, FieldColumns> quantities;

    const FieldColumns& at(Quantity q) const
    {
        auto it = quantities.find(q);
        if (it == quantities.end())
            throw InvalidArgument("fields: quantity " + std::string(to_string(q)) + " missing");
        return it->second;
    }

    std::size_t cells() const { return quantities.empty() ? 0 : quantities.begin()->second.x.size(); }
};

inline FieldTable field_table(const RunResult& run, std::size_t replication, bool with_lambda)
{
    FieldTable t;
    const auto& rep = run.replications.at(replication);
    for (Quantity q : kQuantities)
    {
        const auto& ef = rep.fields[static_cast<int>(q)];
        FieldColumns c{run.x, ef.mean, ef.variance, {}};
        if (with_lambda)
            c.lambda = ef.multipliers.lambda;
        t.quantities[q] = std::move(c);
    }
    return t;
}

inline std::string fields_csv(const FieldTable& t)
{
    std::size_t nl = 0;
    for (const auto& [q, c] : t.quantities)
        nl = std::max(nl, c.lambda.size());
    std::string s = "quantity,cell_index,x,mean,variance";
    for (std::size_t l = 0; l < nl; ++l)
        s += ",lambda_" + std::to_string(l + 1);
    s += '\n';
    for (const auto& [q, c] : t.quantities)
        for (std::size_t j = 0; j < c.x.size(); ++j)
        {
            s += std::string(to_string(q)) + ',' + std::to_string(j) + ',' + format_double(c.x[j]) + ','
                 + format_double(c.mean[j]) + ',' + format_double(c.variance[j]);
            for (std::size_t l = 0; l < nl; ++l)
                s += ',' + format_double(c.lambda[l][j]);
            s += '\n';
        }
    return s;
}

inline FieldTable parse_fields_csv(const std::vector<std::string>& lines)
{
    if (lines.empty())
        throw InvalidArgument("fields.csv: empty");
    const auto head = detail::split_csv_line(lines[0]);
    if (head.size() < 5 || head[0] != "quantity" || head[1] != "cell_index" || head[2] != "x"
        || head[3] != "mean" || head[4] != "variance")
        throw InvalidArgument("fields.csv: unexpected header '" + lines[0] + "'");
    const std::size_t nl = head.size() - 5;
    for (std::size_t l = 0; l < nl; ++l)
        if (head[5 + l] != "lambda_" + std::to_string(l + 1))
            throw InvalidArgument("fields.csv: unexpected column '" + head[5 + l] + "'");
    FieldTable t;
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        const auto f = detail::split_csv_line(lines[i]);
        if (f.size() != head.size())
            throw InvalidArgument("fields.csv: wrong column count on line " + std::to_string(i + 1));
        auto& c = t.quantities[parse_quantity(f[0])];
        if (std::to_string(c.x.size()) != f[1])
            throw InvalidArgument("fields.csv: cell_index out of order on line " + std::to_string(i + 1));
        c.x.push_back(detail::parse_double(f[2], "x"));
        c.mean.push_back(detail::parse_double(f[3], "mean"));
        c.variance.push_back(detail::parse_double(f[4], "variance"));
        c.lambda.resize(nl);
        for (std::size_t l = 0; l < nl; ++l)
            c.lambda[l].push_back(detail::parse_double(f[5 + l], "lambda"));
    }
    return t;
}

inline FieldTable load_fields_csv(const std::filesystem::path& p)
{
    return parse_fields_csv(detail::read_lines(p));
}

// ---------------------------------------------------------------------------
// reference cache

inline std::string reference_csv(const ReferenceSolution& ref)
{
    std::string s = "# kind=" + ref.kind + " scenario=" + ref.scenario + " nc=" + std::to_string(ref.nc)
                    + " nx=" + std::to_string(ref.nx) + " t=" + format_double(ref.t) + '\n';
    FieldTable t;
    for (Quantity q : kQuantities)
        t.quantities[q] = {ref.x, ref.of(q).mean, ref.of(q).variance, {}};
    return s + fields_csv(t);
}

inline ReferenceSolution load_reference_csv(const std::filesystem::path& p)
{
    auto lines = detail::read_lines(p);
    if (lines.empty() || lines[0].rfind("# ", 0) != 0)
        throw InvalidArgument("reference: missing provenance line in " + p.string());
    ReferenceSolution ref;
    std::istringstream head(lines[0].substr(2));
    for (std::string kv; head >> kv;)
    {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            continue;
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "kind")
            ref.kind = v;
        else if (k == "scenario")
            ref.scenario = v;
        else if (k == "nc")
            ref.nc = std::stoi(v);
        else if (k == "nx")
            ref.nx = std::stoi(v);
        else if (k == "t")
            ref.t = detail::parse_double(v, "t");
    }
    lines.erase(lines.begin());
    const FieldTable t = parse_fields_csv(lines);
    for (Quantity q : kQuantities)
    {
        const auto& c = t.at(q);
        ref.x = c.x;
        ref.stats[static_cast<int>(q)] = {c.mean, c.variance};
    }
    if (static_cast<int>(ref.x.size()) != ref.nx)
        throw InvalidArgument("reference: cell count disagrees with provenance in " + p.string());
    return ref;
}

inline std::filesystem::path default_cache_dir()
{
    if (const char* env = std::getenv("BGKMC_CACHE_DIR"); env && *env)
        return env;
    return std::filesystem::temp_directory_path() / "bgkmc-cache";
}

/// File name that encodes every input of a collocation reference.
inline std::string reference_cache_key(const Scenario& sc, int nc, int nx, double t, const SolverSetup& setup)
{
    const SolverConfig c = setup.config_for(sc);
    std::string key = std::string(to_string(sc.id)) + "_nc" + std::to_string(nc) + "_nx" + std::to_string(nx)
                      + "_t" + format_double(t) + "_nv" + std::to_string(setup.nv) + "_R"
                      + format_double(setup.half_width) + "_cfl" + format_double(c.cfl_ratio) + "_eps"
                      + format_double(c.epsilon) + "_" + c.table.name + "_tol"
                      + format_double(c.newton.tolerance) + "_v" + std::string(kVersion);
    for (char& ch : key)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.'))
            ch = '-';
    return key + ".csv";
}

/// Collocation reference, read from or written to the cache directory.
inline ReferenceSolution cached_collocation_reference(const Scenario& sc, int nc, int nx,
                                                      const SolverSetup& setup, unsigned threads = 0,
                                                      std::optional<double> t = std::nullopt,
                                                      std::optional<std::filesystem::path> dir = std::nullopt)
{
    const double tf = t.value_or(sc.final_time);
    const auto path = dir.value_or(default_cache_dir()) / reference_cache_key(sc, nc, nx, tf, setup);
    if (std::filesystem::exists(path))
        return load_reference_csv(path);
    ReferenceSolution ref = collocation_reference(sc, nc, nx, setup, threads, tf);
    const auto tmp = path.string() + ".tmp" + std::to_string(std::hash<std::string>{}(path.string()));
    detail::write_text(tmp, reference_csv(ref));
    std::filesystem::rename(tmp, path);
    return ref;
}

// ---------------------------------------------------------------------------
// errors.csv

struct ErrorReport
{
    struct Row
    {
        Quantity quantity;
        std::string metric;
        long cell_index; // -1 for the scalar overall error
        double x;
        double value;
    };
    std::vector<Row> rows;

    double overall(Quantity q) const
    {
        for (const auto& r : rows)
            if (r.quantity == q && r.metric == "E_overall")
                return r.value;
        throw InvalidArgument("errors: no overall error for " + std::string(to_string(q)));
    }
};

/// E(t), E_dx(x) against @p full and, when given, E_rel(x) against a finest-mesh reference.
inline ErrorReport compute_errors(const std::map<Quantity, std::vector<std::vector<double>>>& reps,
                                  const std::vector<double>& x, const ReferenceSolution& full,
                                  const ReferenceSolution* matched = nullptr)
{
    ErrorReport rep;
    const int nx = static_cast<int>(x.size());
    const ReferenceSolution ref = full.nx == nx ? full : full.restricted(nx);
    for (const auto& [q, fields] : reps)
    {
        const auto& r = ref.of(q).mean;
        rep.rows.push_back({q, "E_overall", -1, 0.0, error_overall(fields, r)});
        const auto pw = error_pointwise(fields, r);
        for (int j = 0; j < nx; ++j)
            rep.rows.push_back({q, "E_pointwise", j, x[j], pw[j]});
        if (matched)
        {
            if (matched->nx != nx)
                throw InvalidArgument("errors: matched reference must be on the estimator mesh");
            const auto rel = error_relative(fields, matched->of(q).mean);
            for (int j = 0; j < nx; ++j)
                rep.rows.push_back({q, "E_relative", j, x[j], rel[j]});
        }
    }
    return rep;
}

inline std::string errors_csv(const ErrorReport& e)
{
    std::string s = "quantity,metric,cell_index,x,value\n";
    for (const auto& r : e.rows)
        s += std::string(to_string(r.quantity)) + ',' + r.metric + ',' + std::to_string(r.cell_index) + ','
             + (r.cell_index < 0 ? std::string() : format_double(r.x)) + ',' + format_double(r.value) + '\n';
    return s;
}

inline ErrorReport load_errors_csv(const std::filesystem::path& p)
{
    const auto lines = detail::read_lines(p);
    if (lines.empty() || lines[0] != "quantity,metric,cell_index,x,value")
        throw InvalidArgument("errors.csv: unexpected header");
    ErrorReport e;
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        const auto f = detail::split_csv_line(lines[i]);
        if (f.size() != 5)
            throw InvalidArgument("errors.csv: wrong column count on line " + std::to_string(i + 1));
        const long idx = std::stol(f[2]);
        e.rows.push_back({parse_quantity(f[0]), f[1], idx, idx < 0 ? 0.0 : detail::parse_double(f[3], "x"),
                          detail::parse_double(f[4], "value")});
    }
    return e;
}

// ---------------------------------------------------------------------------
// snapshots

inline std::string snapshot_csv(const std::vector<double>& x, const MacroFields& f)
{
    std::string s = "x,rho,U,T\n";
    for (std::size_t j = 0; j < x.size(); ++j)
        s += format_double(x[j]) + ',' + format_double(f.rho[j]) + ',' + format_double(f.U[j]) + ','
             + format_double(f.T[j]) + '\n';
    return s;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) { detail::write_text(p, text); }

} // namespace bgkmc
