#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "error.hpp"
#include "maxwellian.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"
#include "solver.hpp"
#include "transport.hpp"

namespace bgkmc {

enum class ScenarioId { test1_smooth, test2_interface, test2_state, test3_heating };

inline std::string_view to_string(ScenarioId id)
{
    switch (id)
    {
    case ScenarioId::test1_smooth: return "test1";
    case ScenarioId::test2_interface: return "test2_interface";
    case ScenarioId::test2_state: return "test2_state";
    case ScenarioId::test3_heating: return "test3";
    }
    return "?";
}

inline ScenarioId parse_scenario(std::string_view s)
{
    if (s == "test1" || s == "test1_smooth")
        return ScenarioId::test1_smooth;
    if (s == "test2_interface" || s == "test2")
        return ScenarioId::test2_interface;
    if (s == "test2_state")
        return ScenarioId::test2_state;
    if (s == "test3" || s == "test3_heating")
        return ScenarioId::test3_heating;
    throw InvalidArgument("unknown scenario '" + std::string(s) + "'");
}

/// One of the three benchmark problems on x in [0, 1] driven by z ~ U[-1, 1].
struct Scenario
{
    ScenarioId id = ScenarioId::test1_smooth;
    double epsilon = 1.0;
    double a = 0.0;
    double b = 1.0;
    double final_time = 0.1;

    // test 1: rho = (2 + sin 2pi x + rho_amp sin 4pi x z)/3, T = (3 + cos 2pi x + T_amp cos 4pi x z)/4
    double bimodal_velocity = 0.2;
    double rho_amplitude = 0.5;
    double T_amplitude = 0.5;

    // test 2: Sod-type states
    double left_rho = 1.0, left_U = 0.0, left_T = 1.0;
    double right_rho = 0.125, right_U = 0.0, right_T = 0.25;
    double interface = 0.5;
    double interface_shift = 0.05;  // (I): interface at 0.5 + 0.05 z
    double density_amplitude = 0.1; // (II): rho_l = 1 + 0.1 (z + 1)

    // test 3: wall temperature T_w = wall_factor (T0 + s z)
    double rho0 = 1.0, U0 = 0.0, T0 = 1.0;
    double wall_factor = 3.0;
    double wall_slope = 0.2;

    static Scenario make(ScenarioId id)
    {
        Scenario s;
        s.id = id;
        switch (id)
        {
        case ScenarioId::test1_smooth:
            s.epsilon = 1.0;
            s.final_time = 0.1;
            break;
        case ScenarioId::test2_interface:
        case ScenarioId::test2_state:
            s.epsilon = 1e-6;
            s.final_time = 0.15;
            break;
        case ScenarioId::test3_heating:
            s.epsilon = 0.1;
            s.final_time = 0.1;
            break;
        }
        return s;
    }

    SpatialMesh mesh(int nx) const { return SpatialMesh(a, b, nx); }

    double wall_temperature(double z) const { return wall_factor * (T0 + wall_slope * z); }
};

/// Coordinates of one random draw; equal paths give bit-identical z.
struct SeedPath
{
    std::uint64_t seed = 0;
    std::uint64_t level = 0;
    std::uint64_t sample = 0;
    std::uint64_t replication = 0;
};

/**
 * @brief z ~ U(-1, 1) as a pure function of the seed path.
 *
 * The path is expanded by std::seed_seq into a fresh mt19937_64 state, so a
 * draw never depends on which thread or in which order it is requested.
 */
inline double draw_z(const SeedPath& path)
{
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(path.seed),  hi(path.seed),   lo(path.level),       hi(path.level),
                      lo(path.sample), hi(path.sample), lo(path.replication), hi(path.replication)};
    std::mt19937_64 engine(seq);
    const std::uint64_t bits = engine() >> 11; // 53 random bits
    const double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

namespace detail {

inline void check_z(double z)
{
    if (!(z >= -1.0 && z <= 1.0))
        throw InvalidArgument("random input z must lie in [-1, 1], got " + std::to_string(z));
}

} // namespace detail

/// Cell-centre evaluation of the scenario's initial distributions.
inline KineticState initial_state(const Scenario& sc, double z, const SpatialMesh& mesh,
                                  const VelocityGrid& grid)
{
    detail::check_z(z);
    const int nv = static_cast<int>(grid.size());
    KineticState s(mesh.nx, nv, 0.0);
    std::vector<double> bp(nv), bs(nv);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int j = 0; j < mesh.nx; ++j)
    {
        const double x = mesh.center(j);
        auto phi = s.phi_row(j);
        auto psi = s.psi_row(j);
        switch (sc.id)
        {
        case ScenarioId::test1_smooth: {
            const double rho =
                (2.0 + std::sin(two_pi * x) + sc.rho_amplitude * std::sin(2.0 * two_pi * x) * z) / 3.0;
            const double T =
                (3.0 + std::cos(two_pi * x) + sc.T_amplitude * std::cos(2.0 * two_pi * x) * z) / 4.0;
            const double U = sc.bimodal_velocity;
            continuous_maxwellian_into(grid, rho, U, T, phi, psi);
            continuous_maxwellian_into(grid, rho, -U, T, bp, bs);
            for (int k = 0; k < nv; ++k)
            {
                phi[k] = 0.5 * phi[k] + 0.5 * bp[k];
                psi[k] = 0.5 * psi[k] + 0.5 * bs[k];
            }
            break;
        }
        case ScenarioId::test2_interface:
        case ScenarioId::test2_state: {
            const bool interface_case = sc.id == ScenarioId::test2_interface;
            const double xs = interface_case ? sc.interface + sc.interface_shift * z : sc.interface;
            const double rho_l = interface_case ? sc.left_rho : sc.left_rho + sc.density_amplitude * (z + 1.0);
            if (x <= xs)
                continuous_maxwellian_into(grid, rho_l, sc.left_U, sc.left_T, phi, psi);
            else
                continuous_maxwellian_into(grid, sc.right_rho, sc.right_U, sc.right_T, phi, psi);
            break;
        }
        case ScenarioId::test3_heating:
            continuous_maxwellian_into(grid, sc.rho0, sc.U0, sc.T0, phi, psi);
            break;
        }
    }
    return s;
}

/// Periodic for test 1, homogeneous Neumann for the shock tubes, and a
/// diffusive wall at x = 0 with Neumann at x = 1 for the heating problem.
inline BoundaryPair boundary_for(const Scenario& sc, double z)
{
    detail::check_z(z);
    switch (sc.id)
    {
    case ScenarioId::test1_smooth:
        return {BoundarySpec::periodic(), BoundarySpec::periodic()};
    case ScenarioId::test2_interface:
    case ScenarioId::test2_state:
        return {BoundarySpec::neumann(), BoundarySpec::neumann()};
    case ScenarioId::test3_heating:
        return {BoundarySpec::diffusive_wall(sc.wall_temperature(z)), BoundarySpec::neumann()};
    }
    throw InvalidArgument("boundary_for: unknown scenario");
}

} // namespace bgkmc
