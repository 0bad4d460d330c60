#include <catch_amalgamated.hpp>

#include <bgkmc/reference.hpp>

#include "oracles.hpp"

#include <cmath>

using namespace bgkmc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("collocation rule integrates polynomials in z", "[reference]")
{
    for (int nc : {2, 5, 40})
    {
        const auto rule = CollocationRule::gauss_legendre(nc);
        double wsum = 0.0;
        for (double w : rule.weights)
            wsum += w;
        CHECK_THAT(wsum, WithinAbs(1.0, 1e-14));
        std::vector<std::vector<double>> z, z2;
        for (double x : rule.nodes)
        {
            z.push_back({x});
            z2.push_back({x * x});
        }
        const MeanVariance a = rule.integrate(z);
        CHECK(std::abs(a.mean[0]) < 1e-14);
        CHECK_THAT(a.variance[0], WithinAbs(1.0 / 3.0, 1e-14));
        const MeanVariance b = rule.integrate(z2);
        CHECK_THAT(b.mean[0], WithinAbs(1.0 / 3.0, 1e-14));
        if (nc >= 3)
            CHECK_THAT(b.variance[0], WithinAbs(1.0 / 5.0 - 1.0 / 9.0, 1e-14));
    }
    const auto one = CollocationRule::gauss_legendre(1);
    CHECK(one.nodes[0] == 0.0);
    CHECK_THAT(one.weights[0], WithinAbs(1.0, 1e-15));
    CHECK_THROWS_AS(CollocationRule::gauss_legendre(0), InvalidArgument);
}

TEST_CASE("one-node collocation is the deterministic midpoint solve", "[reference]")
{
    const Scenario sc = Scenario::make(ScenarioId::test1_smooth);
    SolverSetup setup;
    const ReferenceSolution ref = collocation_reference(sc, 1, 10, setup, 1, 0.02);
    const VelocityGrid g = setup.grid();
    const MacroFields f = macro_fields(solve_at(sc, 0.0, 10, g, setup, 0.02).moments);
    CHECK(ref.of(Quantity::rho).mean == f.rho);
    CHECK(ref.of(Quantity::T).mean == f.T);
    for (double v : ref.of(Quantity::U).variance)
        CHECK(v == 0.0);
}

TEST_CASE("smooth scenario collocation self-converges", "[reference]")
{
    // limiter switching makes the discrete solution piecewise smooth in z,
    // so convergence in Nc is algebraic rather than spectral
    const Scenario sc = Scenario::make(ScenarioId::test1_smooth);
    const ReferenceSolution a = collocation_reference(sc, 10, 10, SolverSetup{});
    const ReferenceSolution b = collocation_reference(sc, 20, 10, SolverSetup{});
    const ReferenceSolution c = collocation_reference(sc, 40, 10, SolverSetup{});
    double ab = 0.0, bc = 0.0;
    for (int j = 0; j < 10; ++j)
    {
        ab = std::max(ab, std::abs(a.of(Quantity::rho).mean[j] - b.of(Quantity::rho).mean[j]));
        bc = std::max(bc, std::abs(b.of(Quantity::rho).mean[j] - c.of(Quantity::rho).mean[j]));
    }
    CHECK(bc <= 5e-5);
    CHECK(bc < ab);
}

TEST_CASE("restriction of a reference averages cells", "[reference]")
{
    ReferenceSolution r;
    r.nx = 4;
    r.x = {0.125, 0.375, 0.625, 0.875};
    for (auto& s : r.stats)
        s = {{1.0, 3.0, 5.0, 7.0}, {0.0, 2.0, 0.0, 2.0}};
    const ReferenceSolution c = r.restricted(2);
    CHECK(c.of(Quantity::rho).mean == std::vector<double>{2.0, 6.0});
    CHECK(c.x == std::vector<double>{0.25, 0.75});
}

TEST_CASE("exact Riemann solver", "[reference]")
{
    const PrimitiveState L{1.0, 0.0, 1.0}, R{0.125, 0.0, 0.25};
    const double g = 5.0 / 3.0;

    SECTION("identical states give a constant profile")
    {
        const std::vector<double> xi{-2.0, -0.5, 0.0, 0.3, 2.0};
        for (const auto& s : euler_riemann_exact(L, L, xi))
        {
            CHECK_THAT(s.rho, WithinAbs(1.0, 1e-12));
            CHECK_THAT(s.U, WithinAbs(0.0, 1e-12));
            CHECK_THAT(s.T, WithinAbs(1.0, 1e-12));
        }
    }
    SECTION("star pressure agrees with a bisection oracle")
    {
        const ExactRiemann rs(L, R);
        const double p = oracle::riemann_star_pressure_bisection(1.0, 0.0, 1.0, 0.125, 0.0, 0.03125, g);
        CHECK_THAT(rs.star_pressure(), WithinAbs(p, 1e-10));
        const ExactRiemann rs2({1.0, 0.75, 1.0}, {0.125, 0.0, 0.8});
        const double p2 = oracle::riemann_star_pressure_bisection(1.0, 0.75, 1.0, 0.125, 0.0, 0.1, g);
        CHECK_THAT(rs2.star_pressure(), WithinAbs(p2, 1e-10));
    }
    SECTION("mirrored data give the mirrored profile")
    {
        const std::vector<double> xi{-1.5, -0.9, -0.4, -0.1, 0.2, 0.6, 1.1, 1.6};
        std::vector<double> mxi;
        for (double s : xi)
            mxi.push_back(-s);
        const auto a = euler_riemann_exact(L, R, xi);
        const auto b = euler_riemann_exact({R.rho, -R.U, R.T}, {L.rho, -L.U, L.T}, mxi);
        for (std::size_t i = 0; i < xi.size(); ++i)
        {
            CHECK_THAT(a[i].rho, WithinAbs(b[i].rho, 1e-12));
            CHECK_THAT(a[i].U, WithinAbs(-b[i].U, 1e-12));
            CHECK_THAT(a[i].T, WithinAbs(b[i].T, 1e-12));
        }
    }
    SECTION("Rankine-Hugoniot across the shock and a clean contact")
    {
        const ExactRiemann rs(L, R);
        const double ps = rs.star_pressure(), us = rs.star_velocity();
        const double cr = std::sqrt(g * R.p() / R.rho);
        const double S = R.U + cr * std::sqrt((g + 1) / (2 * g) * ps / R.p() + (g - 1) / (2 * g));
        const PrimitiveState behind = rs.sample(S - 1e-9), ahead = rs.sample(S + 1e-9);
        auto energy = [g](const PrimitiveState& s) { return s.p() / (g - 1) + 0.5 * s.rho * s.U * s.U; };
        const double mass = S * (behind.rho - ahead.rho) - (behind.rho * behind.U - ahead.rho * ahead.U);
        const double mom = S * (behind.rho * behind.U - ahead.rho * ahead.U)
                           - (behind.rho * behind.U * behind.U + behind.p() - ahead.rho * ahead.U * ahead.U - ahead.p());
        const double en = S * (energy(behind) - energy(ahead))
                          - ((energy(behind) + behind.p()) * behind.U - (energy(ahead) + ahead.p()) * ahead.U);
        CHECK(std::abs(mass) < 1e-9);
        CHECK(std::abs(mom) < 1e-9);
        CHECK(std::abs(en) < 1e-9);

        const PrimitiveState cl = rs.sample(us - 1e-9), cr_ = rs.sample(us + 1e-9);
        CHECK_THAT(cl.p(), WithinAbs(cr_.p(), 1e-10));
        CHECK_THAT(cl.U, WithinAbs(cr_.U, 1e-10));
        CHECK(cl.rho > cr_.rho);
    }
    SECTION("vacuum generation is unsupported")
    {
        CHECK_THROWS_AS(ExactRiemann({1.0, -5.0, 1.0}, {1.0, 5.0, 1.0}), UnsupportedInput);
        CHECK_THROWS_AS(ExactRiemann({0.0, 0.0, 1.0}, {1.0, 0.0, 1.0}), InvalidArgument);
    }
}

TEST_CASE("error functionals", "[reference]")
{
    const std::vector<double> ref{1.0, 2.0, 3.0, 4.0};
    CHECK(error_overall({ref, ref}, ref) == 0.0);
    for (double v : error_pointwise({ref}, ref))
        CHECK(v == 0.0);

    const double c = 0.3;
    auto shifted = [&](double s) {
        std::vector<double> v = ref;
        for (double& x : v)
            x += s;
        return v;
    };
    CHECK_THAT(error_overall({shifted(c)}, ref), WithinAbs(c, 1e-15));
    CHECK_THAT(error_overall({shifted(c), shifted(-c)}, ref), WithinAbs(c, 1e-15));
    for (double v : error_pointwise({shifted(c), shifted(-c)}, ref))
        CHECK_THAT(v, WithinAbs(c, 1e-15));
    const auto single = error_relative({{1.5, 2.0, 2.0, 4.0}}, ref);
    CHECK(single == std::vector<double>{0.5, 0.0, 1.0, 0.0});
    CHECK_THROWS_AS(error_overall({{1.0, 2.0}}, ref), InvalidArgument);
    CHECK_THROWS_AS(error_pointwise({}, ref), InvalidArgument);
}

TEST_CASE("restricting a piecewise-constant reference commutes with the error", "[reference]")
{
    const std::vector<double> coarse_ref{1.0, -2.0, 0.5};
    std::vector<double> fine_ref;
    for (double v : coarse_ref)
        for (int r = 0; r < 4; ++r)
            fine_ref.push_back(v);
    const std::vector<double> est{1.2, -1.0, 0.1};
    std::vector<double> est_fine;
    for (double v : est)
        for (int r = 0; r < 4; ++r)
            est_fine.push_back(v);
    const double a = error_overall({est}, restrict_average(fine_ref, 3));
    const double b = error_overall({est_fine}, fine_ref);
    CHECK_THAT(a, WithinAbs(b, 1e-12));
}
