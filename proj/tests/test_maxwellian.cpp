#include <catch_amalgamated.hpp>

#include <bgkmc/maxwellian.hpp>
#include <bgkmc/quadrature.hpp>

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace bgkmc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Moments moments_of(const VelocityGrid& g, const MaxwellParams& p)
{
    const auto [phi, psi] = eval_maxwellian_pair(g, p);
    return raw_moments(g, phi, psi);
}

} // namespace

TEST_CASE("moments and primitive variables", "[maxwellian]")
{
    const Moments m = Moments::from_primitive(2.0, 0.5, 0.8);
    CHECK_THAT(m.rho, WithinRel(2.0, 1e-15));
    CHECK_THAT(m.U(), WithinRel(0.5, 1e-15));
    CHECK_THAT(m.T(), WithinRel(0.8, 1e-15));
    CHECK_THAT(m.E, WithinRel(1.5 * 2.0 * 0.8 + 0.5 * 2.0 * 0.25, 1e-15));
}

TEST_CASE("rest state has symmetric parameters near the continuous ones", "[maxwellian]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    const Moments target{1.0, 0.0, 1.5};
    const MaxwellParams p = solve_discrete_maxwellian(g, target);
    CHECK(std::abs(p.alpha2) <= 1e-14);
    CHECK_THAT(p.alpha1, WithinAbs(std::log(1.0 / std::sqrt(2.0 * std::numbers::pi)), 1e-4));
    CHECK_THAT(p.alpha3, WithinAbs(-0.5, 1e-4));

    const auto og = oracle::gauss_legendre_long(200, 10.0L);
    const auto oa = oracle::maxwellian_params_long(og, 1.0L, 0.0L, 1.5L);
    CHECK_THAT(p.alpha1, WithinAbs(static_cast<double>(oa[0]), 1e-4));
    CHECK_THAT(p.alpha3, WithinAbs(static_cast<double>(oa[2]), 1e-4));
}

TEST_CASE("discrete Maxwellian agrees with a long-double oracle on the same grid", "[maxwellian]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    const auto og = oracle::gauss_legendre_long(40, 5.0L);
    for (auto [rho, U, T] : {std::array{1.0, 0.0, 1.0}, std::array{0.3, 0.7, 0.4}, std::array{1.8, -0.9, 1.7}})
    {
        const Moments t = Moments::from_primitive(rho, U, T);
        const MaxwellParams p = solve_discrete_maxwellian(g, t);
        const auto o = oracle::maxwellian_params_long(og, t.rho, t.m, t.E);
        CHECK_THAT(p.alpha1, WithinAbs(static_cast<double>(o[0]), 1e-10));
        CHECK_THAT(p.alpha2, WithinAbs(static_cast<double>(o[1]), 1e-10));
        CHECK_THAT(p.alpha3, WithinAbs(static_cast<double>(o[2]), 1e-10));
    }
}

TEST_CASE("randomised targets are matched to tolerance", "[maxwellian]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ur(0.1, 2.0), uu(-1.0, 1.0), ut(0.2, 2.0);
    std::vector<int> iters;
    for (int i = 0; i < 200; ++i)
    {
        const Moments t = Moments::from_primitive(ur(rng), uu(rng), ut(rng));
        NewtonReport rep;
        const MaxwellParams p = solve_discrete_maxwellian(g, t, std::nullopt, {}, &rep);
        iters.push_back(rep.iterations);
        const Moments got = moments_of(g, p);
        const double scale = std::max({1.0, t.rho, std::abs(t.m), t.E});
        CHECK(std::abs(got.rho - t.rho) <= 1e-12 * scale);
        CHECK(std::abs(got.m - t.m) <= 1e-12 * scale);
        CHECK(std::abs(got.E - t.E) <= 1e-12 * scale);
        CHECK(p.alpha3 < 0.0);
    }
    std::nth_element(iters.begin(), iters.begin() + iters.size() / 2, iters.end());
    CHECK(iters[iters.size() / 2] <= 12);
}

TEST_CASE("warm start converges immediately", "[maxwellian]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    const Moments t = Moments::from_primitive(1.2, 0.3, 0.9);
    const MaxwellParams p = solve_discrete_maxwellian(g, t);
    NewtonReport rep;
    const MaxwellParams q = solve_discrete_maxwellian(g, t, p, {}, &rep);
    CHECK(rep.iterations == 0);
    CHECK(q.alpha1 == p.alpha1);
}

TEST_CASE("psi component carries the internal energy", "[maxwellian]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    const MaxwellParams p = solve_discrete_maxwellian(g, Moments::from_primitive(1.0, 0.2, 0.7));
    const auto [phi, psi] = eval_maxwellian_pair(g, p);
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK_THAT(psi[k], WithinRel(-phi[k] / (2.0 * p.alpha3), 1e-15));
}

TEST_CASE("continuous Maxwellian is close to the discrete one on a wide grid", "[maxwellian]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    const auto [phi, psi] = continuous_maxwellian_pair(g, 1.0, 0.1, 0.8);
    const Moments m = raw_moments(g, phi, psi);
    CHECK_THAT(m.rho, WithinAbs(1.0, 1e-4));
    CHECK_THAT(m.U(), WithinAbs(0.1, 1e-4));
    CHECK_THAT(m.T(), WithinAbs(0.8, 1e-4));
}

TEST_CASE("degenerate and unreachable targets", "[maxwellian]")
{
    const auto g = build_gauss_legendre(40, 5.0);
    CHECK_THROWS_AS(solve_discrete_maxwellian(g, Moments{-1.0, 0.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(solve_discrete_maxwellian(g, Moments{1.0, 0.0, 0.0}), InvalidArgument);
    std::vector<double> phi(g.size(), 0.0), psi(g.size(), 0.0);
    CHECK_THROWS_AS(moments_from_state(g, phi, psi), DegenerateState);

    NewtonSettings tight;
    tight.max_iterations = 1;
    CHECK_THROWS_AS(solve_discrete_maxwellian(g, Moments::from_primitive(1.0, 2.5, 0.05), std::nullopt, tight),
                    ConvergenceFailure);
}
