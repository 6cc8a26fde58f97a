#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svhom/hj.hpp"

using namespace svhom;

// n = 2 tensor-table paths: anisotropic quadratic H(p) = p0^2 + 2 p1^2.

namespace {

EffectiveHamiltonianTable quad2d() {
    EffectiveHamiltonianTable t;
    t.regime = Regime::supercritical;
    t.n = 2;
    t.x_grid = Grid::box2d(-2.0, 2.0, -2.0, 2.0, 2.0);
    t.p_grid = Grid::box2d(-4.0, 4.0, -4.0, 4.0, 0.1);
    t.values.resize(static_cast<std::size_t>(t.x_grid.size()) * t.p_grid.size());
    t.diagnostic.assign(t.values.size(), 1e-12);
    std::vector<double> p(2);
    for (int ix = 0; ix < t.x_grid.size(); ++ix)
        for (int ip = 0; ip < t.p_grid.size(); ++ip) {
            t.p_grid.coords(ip, p);
            t.values[static_cast<std::size_t>(ix) * t.p_grid.size() + ip] =
                p[0] * p[0] + 2.0 * p[1] * p[1];
        }
    return t;
}

}  // namespace

TEST_CASE("2D legendre transform: L(q) = q0^2/4 + q1^2/8 on the attainable box") {
    const EffectiveHamiltonianTable t = quad2d();
    const Grid qg = Grid::box2d(-6.0, 6.0, -6.0, 6.0, 0.25);
    const EffectiveLagrangianTable lag = legendre_transform_all(t, qg);
    std::vector<double> q(2);
    for (int iq = 0; iq < qg.size(); ++iq) {
        qg.coords(iq, q);
        const double expect = q[0] * q[0] / 4.0 + q[1] * q[1] / 8.0;
        if (std::abs(q[0]) <= 6.0 && std::abs(q[1]) <= 6.0) {
            REQUIRE(lag.feasible(0, iq));
            // conjugate quantization: up to (dp/2)^2 (H''_00 + H''_11) / 2 = 7.5e-3
            CHECK(std::abs(lag.at(0, iq) - expect) <= 8e-3);
        }
    }
}

TEST_CASE("2D rate function: straight line in both coordinates") {
    const EffectiveHamiltonianTable t = quad2d();
    const Grid dp = Grid::box2d(-2.0, 2.0, -2.0, 2.0, 0.0625);
    const Grid qg = Grid::box2d(-6.0, 6.0, -6.0, 6.0, 0.25);
    const EffectiveLagrangianTable lag = legendre_transform_all(resample_x(t, dp), qg);
    const std::vector<double> x0 = {0.0, 0.0};
    const std::vector<double> x1 = {1.0, -1.0};
    const RateFunctionResult rr = rate_function(lag, x0, x1, 1.0, 16);
    // I = 1/4 + 1/8
    CHECK(std::abs(rr.I - 0.375) <= 5e-3);
    CHECK(rr.path.front()[0] == doctest::Approx(0.0));
    CHECK(rr.path.back()[0] == doctest::Approx(1.0));
    CHECK(rr.path.back()[1] == doctest::Approx(-1.0));
}

TEST_CASE("2D HJ marching stays within the a-priori band and is monotone in t") {
    const EffectiveHamiltonianTable t = quad2d();
    const Grid xg = Grid::box2d(-2.0, 2.0, -2.0, 2.0, 0.1);
    const Payoff h = make_payoff("gauss", {{"a", 1.0}, {"k", 1.0}}, 2);
    const HJSolution sol = solve_effective_hj(t, h, 0.1, xg, 0.8);
    for (int i = 0; i < xg.size(); ++i) {
        CHECK(sol.v[i] >= sol.v0[i] - 1e-12);
        CHECK(sol.v[i] <= 1.0 + 0.1 * (16.0 + 32.0) + 1e-9);
    }
    const std::vector<double> c = {0.0, 0.0};
    CHECK(sol.value_at(c) >= 1.0 - 1e-12);
}
