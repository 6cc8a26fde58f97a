#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "svhom/hj.hpp"
#include "test_models.hpp"

using namespace svhom;
using namespace svhom::testing;

namespace {

EffectiveHamiltonianTable quad_table(double c, double p_lo, double p_hi, double ph) {
    EffectiveHamiltonianTable t;
    t.regime = Regime::supercritical;
    t.n = 1;
    t.x_grid = Grid::box1d(-1.0, 1.0, 1.0);
    t.p_grid = Grid::box1d(p_lo, p_hi, ph);
    t.values.resize(static_cast<std::size_t>(t.x_grid.size()) * t.p_grid.size());
    t.diagnostic.assign(t.values.size(), 1e-12);
    for (int ix = 0; ix < t.x_grid.size(); ++ix)
        for (int ip = 0; ip < t.p_grid.size(); ++ip) {
            const double p = t.p_grid.coord1(ip);
            t.values[static_cast<std::size_t>(ix) * t.p_grid.size() + ip] = c * p * p;
        }
    return t;
}

Payoff well_payoff() { return make_payoff("neg_quad", {{"a", 1.0}, {"k", 1.0}}, 1); }

}  // namespace

TEST_CASE("hopf_lax_oracle: calculus example, zero payoff, monotone in t") {
    const Payoff h = well_payoff();  // 1 - x^2
    CHECK(hopf_lax_oracle(1.0, h, 0.25, 1.0, -4.0, 4.0) == doctest::Approx(0.5).epsilon(1e-6));
    const Payoff zero = make_payoff("constant", {{"c", 0.0}}, 1);
    CHECK(hopf_lax_oracle(1.0, zero, 0.7, 0.3, -4.0, 4.0) == doctest::Approx(0.0));
    const double v1 = hopf_lax_oracle(1.0, h, 0.1, 2.0, -4.0, 4.0);
    const double v2 = hopf_lax_oracle(1.0, h, 0.4, 2.0, -4.0, 4.0);
    CHECK(v2 >= v1);
    CHECK_THROWS_AS(hopf_lax_oracle(1.0, h, 0.0, 0.0, -1.0, 1.0), PreconditionError);
}

TEST_CASE("solve_effective_hj: constant data stays constant") {
    const EffectiveHamiltonianTable t = quad_table(1.0, -8.0, 8.0, 0.05);
    const Grid xg = Grid::box1d(-3.0, 3.0, 0.05);
    const Payoff h = make_payoff("constant", {{"c", 0.7}}, 1);
    const HJSolution sol = solve_effective_hj(t, h, 0.5, xg, 0.8);
    for (double v : sol.v) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("solve_effective_hj: t = 0 returns the initial data exactly") {
    const EffectiveHamiltonianTable t = quad_table(1.0, -8.0, 8.0, 0.05);
    const Grid xg = Grid::box1d(-3.0, 3.0, 0.1);
    const HJSolution sol = solve_effective_hj(t, well_payoff(), 0.0, xg, 0.8);
    for (int i = 0; i < xg.size(); ++i) {
        const double x = xg.coord1(i);
        CHECK(sol.v[i] == doctest::Approx(1.0 - x * x));
    }
}

TEST_CASE("solve_effective_hj matches Hopf-Lax for the quadratic oracle") {
    const EffectiveHamiltonianTable t = quad_table(1.0, -10.0, 10.0, 0.01);
    const Grid xg = Grid::box1d(-4.0, 4.0, 0.02);
    const Payoff h = well_payoff();
    const HJSolution sol = solve_effective_hj(t, h, 0.25, xg, 0.8);

    double sup_err = 0.0;
    for (int i = 0; i < xg.size(); ++i) {
        const double x = xg.coord1(i);
        if (std::abs(x) > 3.0) continue;
        const double hl = hopf_lax_oracle(1.0, h, 0.25, x, -6.0, 6.0);
        sup_err = std::max(sup_err, std::abs(sol.v[i] - hl));
    }
    CHECK(sup_err <= 2e-2);
    const double x1 = 1.0;
    CHECK(std::abs(sol.value_at({&x1, 1}) - 0.5) <= 2e-2);

    // first-order convergence: halving h_x reduces the sup error by >= 1.7
    const Grid xg2 = Grid::box1d(-4.0, 4.0, 0.01);
    const HJSolution sol2 = solve_effective_hj(t, h, 0.25, xg2, 0.8);
    double sup_err2 = 0.0;
    for (int i = 0; i < xg2.size(); ++i) {
        const double x = xg2.coord1(i);
        if (std::abs(x) > 3.0) continue;
        const double hl = hopf_lax_oracle(1.0, h, 0.25, x, -6.0, 6.0);
        sup_err2 = std::max(sup_err2, std::abs(sol2.v[i] - hl));
    }
    CHECK(sup_err / sup_err2 >= 1.7);
}

TEST_CASE("scheme monotonicity: larger data never produces a smaller solution") {
    const EffectiveHamiltonianTable t = quad_table(1.0, -8.0, 8.0, 0.05);
    const Grid xg = Grid::box1d(-3.0, 3.0, 0.05);
    const Payoff h1 = well_payoff();
    const Payoff h2 = make_payoff("neg_quad", {{"a", 1.2}, {"k", 0.9}}, 1);  // h2 >= h1
    const HJSolution s1 = solve_effective_hj(t, h1, 0.3, xg, 0.8);
    const HJSolution s2 = solve_effective_hj(t, h2, 0.3, xg, 0.8);
    for (int i = 0; i < xg.size(); ++i) CHECK(s2.v[i] >= s1.v[i] - 1e-12);
}

TEST_CASE("v is non-decreasing in t at every node") {
    const EffectiveHamiltonianTable t = quad_table(1.0, -8.0, 8.0, 0.05);
    const Grid xg = Grid::box1d(-3.0, 3.0, 0.05);
    const std::vector<double> snaps = {0.1, 0.2};
    const HJSolution sol = solve_effective_hj(t, well_payoff(), 0.3, xg, 0.8, snaps);
    REQUIRE(sol.snapshots.size() == 2);
    for (int i = 0; i < xg.size(); ++i) {
        CHECK(sol.snapshots[0][i] >= sol.v0[i] - 1e-12);
        CHECK(sol.snapshots[1][i] >= sol.snapshots[0][i] - 1e-12);
        CHECK(sol.v[i] >= sol.snapshots[1][i] - 1e-12);
    }
}

TEST_CASE("slope leaving the table p-range raises a restart error") {
    const EffectiveHamiltonianTable t = quad_table(1.0, -2.0, 2.0, 0.05);  // narrow p-range
    const Grid xg = Grid::box1d(-3.0, 3.0, 0.05);
    CHECK_THROWS_AS(solve_effective_hj(t, well_payoff(), 0.25, xg, 0.8), NumericalError);
}

TEST_CASE("hopf-lax consistency: hj solution equals sup_y {h(y) - t L((x-y)/t)}") {
    const EffectiveHamiltonianTable t = quad_table(1.0, -10.0, 10.0, 0.02);
    const Grid xg = Grid::box1d(-4.0, 4.0, 0.02);
    const Payoff h = well_payoff();
    const double T = 0.25;
    const HJSolution sol = solve_effective_hj(t, h, T, xg, 0.8);
    // L(q) = q^2/4 for this table
    for (double x : {-1.0, 0.0, 0.5, 1.5}) {
        double best = -1e300;
        for (int iy = 0; iy < xg.size(); ++iy) {
            const double y = xg.coord1(iy);
            const double q = (x - y) / T;
            best = std::max(best, 1.0 - y * y - T * q * q / 4.0);
        }
        CHECK(std::abs(sol.value_at({&x, 1}) - best) <= 4e-2);
    }
}

TEST_CASE("rate_function: trivial, straight-line quadratic oracle, both horizons") {
    const EffectiveHamiltonianTable t = quad_table(1.0, -5.0, 5.0, 0.01);
    const Grid qg = Grid::box1d(-10.0, 10.0, 0.05);
    EffectiveLagrangianTable lag;
    lag.n = 1;
    lag.x_grid = Grid::box1d(-4.0, 4.0, 0.03125);
    lag.q_grid = qg;
    lag.values.assign(static_cast<std::size_t>(lag.x_grid.size()) * qg.size(), 0.0);
    {
        // tabulate L over the rate grid by conjugating the single H row per x
        EffectiveHamiltonianTable tx = t;
        tx.x_grid = lag.x_grid;
        tx.values.assign(static_cast<std::size_t>(lag.x_grid.size()) * t.p_size(), 0.0);
        tx.diagnostic.assign(tx.values.size(), 1e-12);
        for (int ix = 0; ix < lag.x_grid.size(); ++ix)
            for (int ip = 0; ip < t.p_size(); ++ip)
                tx.values[static_cast<std::size_t>(ix) * t.p_size() + ip] = t.at(0, ip);
        lag = legendre_transform_all(tx, qg);
    }

    const double x0 = 0.0;
    {
        const RateFunctionResult rr = rate_function(lag, {&x0, 1}, {&x0, 1}, 1.0, 16);
        CHECK(rr.I == doctest::Approx(0.0));
        for (const auto& p : rr.path) CHECK(p[0] == doctest::Approx(0.0));
    }
    const double x2 = 2.0;
    {
        const RateFunctionResult rr = rate_function(lag, {&x0, 1}, {&x2, 1}, 1.0, 16);
        CHECK(std::abs(rr.I - 1.0) <= 1e-2);
        // straight line: position at slice k is 2k/16
        for (std::size_t k = 0; k < rr.path.size(); ++k)
            CHECK(rr.path[k][0] == doctest::Approx(2.0 * k / 16.0).epsilon(1e-9));
    }
    {
        const RateFunctionResult rr = rate_function(lag, {&x0, 1}, {&x2, 1}, 0.5, 16);
        CHECK(std::abs(rr.I - 2.0) <= 2e-2);
    }
    // longer horizon never raises the cost
    {
        const RateFunctionResult a = rate_function(lag, {&x0, 1}, {&x2, 1}, 0.5, 16);
        const RateFunctionResult b = rate_function(lag, {&x0, 1}, {&x2, 1}, 1.0, 16);
        CHECK(b.I <= a.I + 1e-12);
    }
}

TEST_CASE("rate_function: unreachable targets raise, preconditions enforced") {
    EffectiveLagrangianTable lag;
    lag.n = 1;
    lag.x_grid = Grid::box1d(-4.0, 4.0, 0.25);
    lag.q_grid = Grid::box1d(-0.5, 0.5, 0.05);  // max speed 0.5
    lag.values.assign(static_cast<std::size_t>(lag.x_grid.size()) * lag.q_grid.size(), 0.0);
    const double x0 = 0.0, x2 = 2.0;
    // distance 2 in time 1 needs speed 2 > 0.5
    CHECK_THROWS_AS(rate_function(lag, {&x0, 1}, {&x2, 1}, 1.0, 16), NumericalError);
    CHECK_THROWS_AS(rate_function(lag, {&x0, 1}, {&x2, 1}, 1.0, 4), PreconditionError);
    const double far = 9.0;
    CHECK_THROWS_AS(rate_function(lag, {&x0, 1}, {&far, 1}, 1.0, 16), PreconditionError);
}
