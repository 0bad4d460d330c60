#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace bgkmc {

/**
 * @brief Coefficients of an IMEX Runge-Kutta scheme with a final relaxation
 * correction phi^{n+1} = phi^{(nu)} + alpha dt^2/eps^2 (M^{n+1} - phi^{n+1}).
 *
 * The explicit matrix acts on transport and must be strictly lower
 * triangular; the implicit matrix acts on relaxation and must be lower
 * triangular with a positive diagonal so every stage is projected towards
 * equilibrium in the stiff limit.
 */
struct ImexTable
{
    std::string name;
    int stages = 0;
    std::vector<double> explicit_coeffs; // stages x stages, row-major
    std::vector<double> implicit_coeffs; // stages x stages, row-major
    double alpha = 0.0;

    double at(int i, int j) const { return explicit_coeffs[i * stages + j]; }
    double a(int i, int j) const { return implicit_coeffs[i * stages + j]; }

    /// Explicit abscissa c~_i = sum_j at(i, j).
    double explicit_node(int i) const
    {
        double c = 0.0;
        for (int j = 0; j < stages; ++j)
            c += at(i, j);
        return c;
    }

    void validate() const
    {
        const auto n = static_cast<std::size_t>(stages);
        if (stages < 1 || explicit_coeffs.size() != n * n || implicit_coeffs.size() != n * n)
            throw InvalidArgument("ImexTable '" + name + "': coefficient arrays must be stages x stages");
        for (int i = 0; i < stages; ++i)
        {
            for (int j = i; j < stages; ++j)
                if (at(i, j) != 0.0)
                    throw InvalidArgument("ImexTable '" + name
                                          + "': explicit matrix must be strictly lower triangular");
            for (int j = i + 1; j < stages; ++j)
                if (a(i, j) != 0.0)
                    throw InvalidArgument("ImexTable '" + name
                                          + "': implicit matrix must be lower triangular");
            if (!(a(i, i) > 0.0))
                throw InvalidArgument("ImexTable '" + name
                                      + "': implicit diagonal must be positive");
        }
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw InvalidArgument("ImexTable '" + name + "': alpha must be finite and >= 0");
    }
};

/**
 * Default second-order table. In Shu-Osher form (z = dt/eps, G = M - phi,
 * T = transport operator):
 *
 *   phi1 = phi^n + 5/6 z G1
 *   phi2 = 9/10 phi^n + 1/10 phi1 + 1/4 z G2
 *   phi3 = phi2 - dt T phi2 + 1/3 z G3
 *   phi4 = 1/10 phi^n + 2/5 phi1 + 1/2 (phi3 - dt T phi3) + 1/3 z G4
 *
 * so every stage is a convex combination of forward-Euler transport steps and
 * a positive implicit relaxation. The coupled IMEX order conditions hold
 * with alpha = 43/144.
 */
inline ImexTable pp_imex_4s()
{
    ImexTable t;
    t.name = "pp-imex-4s";
    t.stages = 4;
    t.explicit_coeffs = {
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.5, 0.5, 0.0,
    };
    t.implicit_coeffs = {
        5.0 / 6.0,  0.0,       0.0,       0.0,
        1.0 / 12.0, 0.25,      0.0,       0.0,
        1.0 / 12.0, 0.25,      1.0 / 3.0, 0.0,
        0.375,      0.125,     1.0 / 6.0, 1.0 / 3.0,
    };
    t.alpha = 43.0 / 144.0;
    return t;
}

/// First-order IMEX Euler, kept for order-verification tests.
inline ImexTable imex_euler()
{
    ImexTable t;
    t.name = "imex-euler";
    t.stages = 2;
    t.explicit_coeffs = {0.0, 0.0, 1.0, 0.0};
    t.implicit_coeffs = {1.0, 0.0, 0.0, 1.0};
    t.alpha = 0.0;
    return t;
}

inline ImexTable imex_table_by_name(std::string_view name)
{
    if (name == "pp-imex-4s")
        return pp_imex_4s();
    if (name == "imex-euler")
        return imex_euler();
    throw InvalidArgument("unknown IMEX table '" + std::string(name) + "'");
}

inline std::vector<std::string> imex_table_names() { return {"pp-imex-4s", "imex-euler"}; }

} // namespace bgkmc
