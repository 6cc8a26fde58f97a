#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svhom/epspde.hpp"
#include "svhom/sde_mc.hpp"
#include "test_models.hpp"

using namespace svhom;
using namespace svhom::testing;

TEST_CASE("constant payoff stays constant (all derivative slots vanish)") {
    const ModelSpec s = bump1d(2.0);
    const Grid g = Grid::box2d(-3.0, 3.0, -6.0, 6.0, 0.1);
    const Payoff h = make_payoff("constant", {{"c", 1.5}}, 1);
    const EpsPdeSolution sol = solve_eps_pde(s, 0.1, h, 0.3, g, {});
    for (double v : sol.v) CHECK(v == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("initial condition reproduced exactly at t = 0") {
    const ModelSpec s = bump1d(2.0);
    const Grid g = Grid::box2d(-3.0, 3.0, -6.0, 6.0, 0.1);
    const Payoff h = make_payoff("gauss", {{"a", 1.0}, {"k", 1.0}}, 1);
    const EpsPdeSolution sol = solve_eps_pde(s, 0.1, h, 0.0, g, {});
    for (int i = 0; i < g.axis_nodes(0); ++i) {
        const double x = g.axis_lo(0) + i * g.h();
        CHECK(sol.v[static_cast<std::size_t>(i) * g.axis_nodes(1)] ==
              doctest::Approx(h({&x, 1})));
    }
}

TEST_CASE("Gaussian closed form: linear payoff, constant sigma") {
    // v(t, x, y) = x + t for sigma = 1, phi = 0 (fast variable inert)
    const ModelSpec s = ou1d(2.0, 1.0, 0.0);
    const Grid g = Grid::box2d(-4.0, 4.0, -6.0, 6.0, 0.1);
    const Payoff h = make_payoff("linear", {{"p", 1.0}}, 1);
    EpsPdeOptions opt;
    opt.dt = 5e-4;
    const EpsPdeSolution sol = solve_eps_pde(s, 0.1, h, 0.5, g, opt);
    CHECK(std::abs(sol.value_at(0.0, 0.0) - 0.5) <= 2e-2);
    CHECK(std::abs(sol.value_at(0.5, 1.0) - 1.0) <= 2e-2);
}

TEST_CASE("matches the MC estimator at matched parameters (critical bump)") {
    const ModelSpec s = bump1d(2.0);
    const Grid g = Grid::box2d(-4.0, 4.0, -8.0, 8.0, 0.1);
    const Payoff h = make_payoff("gauss", {{"a", 1.0}, {"k", 1.0}}, 1);
    const double eps = 0.2, t = 0.25;
    EpsPdeOptions popt;
    popt.dt = 1e-3;
    const EpsPdeSolution ps = solve_eps_pde(s, eps, h, t, g, popt);
    McOptions mo;
    mo.n_paths = 40000;
    mo.dt = 0.01;
    mo.seed = 21;
    const double zero = 0.0;
    const MCEstimate e = estimate_v_eps(s, eps, t, {&zero, 1}, {&zero, 1}, h, mo);
    CHECK(std::abs(ps.value_at(0.0, 0.0) - e.value) <= 3.0 * e.std_error + 2e-2);
}

TEST_CASE("degenerate limit: y-inert problem reduces to the 1D x-scheme") {
    // sigma independent of y, tau = 0: the y-operator acts on a y-constant
    // field as the identity, so the solver must match a 1D replica exactly.
    ModelSpec s = ou1d(2.0, 1.0, 0.5);
    s.tau = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
    s.tau_far = {0.0};
    s.fast_global_ou = false;

    const double eps = 0.1, T = 0.3;
    const Grid g = Grid::box2d(-3.0, 3.0, -6.0, 6.0, 0.1);
    const Payoff h = make_payoff("gauss", {{"a", 1.0}, {"k", 1.0}}, 1);
    EpsPdeOptions opt;
    opt.dt = 1e-3;
    const EpsPdeSolution sol = solve_eps_pde(s, eps, h, T, g, opt);

    // 1D replica with the same stencils and the same dt
    const int nx = g.axis_nodes(0);
    const double hx = g.h();
    std::vector<double> v(nx), vn(nx);
    for (int i = 0; i < nx; ++i) {
        const double x = g.axis_lo(0) + i * hx;
        v[i] = h({&x, 1});
    }
    const auto godunov_sq = [](double dm, double dp) {
        if (dm <= dp) return std::max(dm * dm, dp * dp);
        if (dm >= 0.0 && dp <= 0.0) return 0.0;
        return std::min(dm * dm, dp * dp);
    };
    for (std::int64_t k = 0; k < sol.steps; ++k) {
        for (int i = 0; i < nx; ++i) {
            const int im = i > 0 ? i - 1 : 1;
            const int ip = i < nx - 1 ? i + 1 : nx - 2;
            const double dm = (v[i] - v[im]) / hx * (i > 0 ? 1.0 : -1.0);
            const double dp = (v[ip] - v[i]) / hx * (i < nx - 1 ? 1.0 : -1.0);
            const double vxx = (v[ip] - 2.0 * v[i] + v[im]) / (hx * hx);
            const double vx_up = 0.5 >= 0.0 ? dp : dm;
            vn[i] = v[i] + sol.dt * (godunov_sq(dm, dp) + eps * (vxx + 0.5 * vx_up));
        }
        v = vn;
    }
    for (int i = 0; i < nx; ++i)
        CHECK(std::abs(sol.v[static_cast<std::size_t>(i) * g.axis_nodes(1) +
                             g.axis_nodes(1) / 2] -
                       v[i]) <= 1e-10);
}

TEST_CASE("eps below the stiffness budget is rejected") {
    const ModelSpec s = bump1d(2.0);
    const Grid g = Grid::box2d(-3.0, 3.0, -6.0, 6.0, 0.1);
    const Payoff h = make_payoff("constant", {{"c", 1.0}}, 1);
    CHECK_THROWS_AS(solve_eps_pde(s, 0.01, h, 0.1, g, {}), PreconditionError);
}

TEST_CASE("snapshots are captured at the requested times") {
    const ModelSpec s = bump1d(2.0);
    const Grid g = Grid::box2d(-3.0, 3.0, -6.0, 6.0, 0.2);
    const Payoff h = make_payoff("gauss", {{"a", 1.0}, {"k", 1.0}}, 1);
    EpsPdeOptions opt;
    opt.dt = 2e-3;
    opt.snapshot_times = {0.1, 0.2};
    const EpsPdeSolution sol = solve_eps_pde(s, 0.2, h, 0.3, g, opt);
    REQUIRE(sol.snapshots.size() == 2);
    CHECK(sol.snapshot_times[0] == doctest::Approx(0.1).epsilon(0.05));
    CHECK(sol.snapshot_times[1] == doctest::Approx(0.2).epsilon(0.05));
}
