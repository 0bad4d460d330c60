#include <catch_amalgamated.hpp>

#include <bgkmc/estimators.hpp>
#include <bgkmc/random_inputs.hpp>

#include "oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace bgkmc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("scenario constants are frozen", "[random_inputs]")
{
    const Scenario t1 = Scenario::make(ScenarioId::test1_smooth);
    CHECK(t1.epsilon == 1.0);
    CHECK(t1.final_time == 0.1);
    CHECK(t1.bimodal_velocity == 0.2);
    CHECK(t1.rho_amplitude == 0.5);
    CHECK(t1.T_amplitude == 0.5);

    const Scenario t2 = Scenario::make(ScenarioId::test2_interface);
    CHECK(t2.epsilon == 1e-6);
    CHECK(t2.final_time == 0.15);
    CHECK(t2.left_rho == 1.0);
    CHECK(t2.left_T == 1.0);
    CHECK(t2.right_rho == 0.125);
    CHECK(t2.right_T == 0.25);
    CHECK(t2.interface == 0.5);
    CHECK(t2.interface_shift == 0.05);
    CHECK(t2.density_amplitude == 0.1);

    const Scenario t3 = Scenario::make(ScenarioId::test3_heating);
    CHECK(t3.epsilon == 0.1);
    CHECK(t3.final_time == 0.1);
    CHECK(t3.T0 == 1.0);
    CHECK(t3.wall_factor == 3.0);
    CHECK(t3.wall_slope == 0.2);

    for (auto s : {"test1", "test2_interface", "test2_state", "test3"})
        CHECK(to_string(parse_scenario(s)) == s);
    CHECK_THROWS_AS(parse_scenario("test4"), InvalidArgument);
}

TEST_CASE("draw_z is deterministic and in range", "[random_inputs]")
{
    const SeedPath p{42, 2, 17, 3};
    CHECK(draw_z(p) == draw_z(p));
    CHECK(draw_z(p) != draw_z({42, 2, 18, 3}));
    CHECK(draw_z(p) != draw_z({42, 1, 17, 3}));
    CHECK(draw_z(p) != draw_z({42, 2, 17, 4}));
    CHECK(draw_z(p) != draw_z({43, 2, 17, 3}));
}

TEST_CASE("draw_z is uniform on [-1, 1]", "[random_inputs]")
{
    const int n = 100000;
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i)
    {
        z[i] = draw_z({9, 1, static_cast<std::uint64_t>(i), 0});
        REQUIRE(z[i] > -1.0);
        REQUIRE(z[i] < 1.0);
    }
    const auto [mean, var] = oracle::mean_var(z);
    CHECK(std::abs(mean) < 0.01);
    CHECK_THAT(var, WithinAbs(1.0 / 3.0, 0.01));

    // Kolmogorov-Smirnov against U[-1, 1], alpha = 0.01
    std::sort(z.begin(), z.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i)
    {
        const double F = 0.5 * (z[i] + 1.0);
        d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
    }
    CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("neighbouring sample indices are uncorrelated", "[random_inputs]")
{
    const int n = 10000;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i)
    {
        a[i] = draw_z({5, 1, static_cast<std::uint64_t>(2 * i), 0});
        b[i] = draw_z({5, 1, static_cast<std::uint64_t>(2 * i + 1), 0});
    }
    const double r = oracle::covariance(a, b) / std::sqrt(oracle::mean_var(a).second * oracle::mean_var(b).second);
    CHECK(std::abs(r) < 0.02);
}

TEST_CASE("smooth scenario initial data", "[random_inputs]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    const Scenario sc = Scenario::make(ScenarioId::test1_smooth);
    const SpatialMesh m = sc.mesh(2); // centres 0.25 and 0.75
    const KineticState s = initial_state(sc, 0.0, m, g);
    const Moments mom = raw_moments(g, s.phi_row(0), s.psi_row(0));
    // rho = (2 + 1 + 0) / 3 = 1; branches at U = +-0.2 with T = 3/4, so the
    // mixture temperature is T + U^2 / 3 and the mean velocity vanishes
    CHECK_THAT(mom.rho, WithinAbs(1.0, 1e-6));
    CHECK(std::abs(mom.m) < 1e-14);
    CHECK_THAT(mom.T(), WithinAbs(0.75 + 0.04 / 3.0, 1e-6));
    CHECK_THROWS_AS(initial_state(sc, 1.5, m, g), InvalidArgument);
}

TEST_CASE("shock tube initial data", "[random_inputs]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    const Scenario sc = Scenario::make(ScenarioId::test2_interface);
    const SpatialMesh m = sc.mesh(100);
    const KineticState s = initial_state(sc, 1.0, m, g);
    for (int j = 0; j < m.nx; ++j)
    {
        const double rho = raw_moments(g, s.phi_row(j), s.psi_row(j)).rho;
        const bool left = m.center(j) <= 0.55;
        CHECK_THAT(rho, WithinAbs(left ? 1.0 : 0.125, 1e-6));
    }
    const Scenario st = Scenario::make(ScenarioId::test2_state);
    const KineticState s2 = initial_state(st, -1.0, m, g);
    CHECK_THAT(raw_moments(g, s2.phi_row(0), s2.psi_row(0)).rho, WithinAbs(1.0, 1e-6));
    const KineticState s3 = initial_state(st, 1.0, m, g);
    CHECK_THAT(raw_moments(g, s3.phi_row(0), s3.psi_row(0)).rho, WithinAbs(1.2, 1e-6));
    CHECK_THAT(raw_moments(g, s3.phi_row(99), s3.psi_row(99)).T(), WithinAbs(0.25, 1e-6));
}

TEST_CASE("boundary conditions per scenario", "[random_inputs]")
{
    const Scenario t3 = Scenario::make(ScenarioId::test3_heating);
    const BoundaryPair b0 = boundary_for(t3, 0.0);
    CHECK(b0.left.kind == BoundaryKind::diffusive_wall);
    CHECK(b0.left.wall_temperature == 3.0);
    CHECK(b0.right.kind == BoundaryKind::neumann);
    CHECK_THAT(boundary_for(t3, 1.0).left.wall_temperature, WithinRel(3.6, 1e-15));
    CHECK(boundary_for(Scenario::make(ScenarioId::test1_smooth), 0.2).left.kind == BoundaryKind::periodic);
    CHECK(boundary_for(Scenario::make(ScenarioId::test1_smooth), 0.2).right.kind == BoundaryKind::periodic);
    CHECK(boundary_for(Scenario::make(ScenarioId::test2_state), 0.2).left.kind == BoundaryKind::neumann);
    CHECK_THROWS_AS(boundary_for(t3, -1.01), InvalidArgument);
}

TEST_CASE("initial data are positive for all inputs", "[random_inputs]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    for (ScenarioId id : {ScenarioId::test1_smooth, ScenarioId::test2_interface, ScenarioId::test2_state,
                          ScenarioId::test3_heating})
        for (double z : {-1.0, -0.3, 0.0, 0.7, 1.0})
        {
            const Scenario sc = Scenario::make(id);
            const KineticState s = initial_state(sc, z, sc.mesh(40), g);
            CHECK(*std::min_element(s.phi.begin(), s.phi.end()) > 0.0);
            CHECK(*std::min_element(s.psi.begin(), s.psi.end()) > 0.0);
        }
}

TEST_CASE("nested meshes agree to second order", "[random_inputs]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    const Scenario sc = Scenario::make(ScenarioId::test1_smooth);
    auto density = [&](int nx) {
        const KineticState s = initial_state(sc, 0.6, sc.mesh(nx), g);
        std::vector<double> rho;
        for (int j = 0; j < nx; ++j)
            rho.push_back(raw_moments(g, s.phi_row(j), s.psi_row(j)).rho);
        return rho;
    };
    auto gap = [&](int nx) {
        const auto coarse = density(nx);
        const auto fine = restrict_average(density(2 * nx), nx);
        double e = 0.0;
        for (int j = 0; j < nx; ++j)
            e = std::max(e, std::abs(coarse[j] - fine[j]));
        return e;
    };
    const double ratio = gap(20) / gap(40);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}
