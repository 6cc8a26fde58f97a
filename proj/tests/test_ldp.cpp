#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svhom/ldp.hpp"
#include "test_models.hpp"

using namespace svhom;
using namespace svhom::testing;

namespace {

EffectiveLagrangianTable quad_lagrangian(double c) {
    // L(q) = q^2 / (4c) tabulated from H = c p^2
    EffectiveHamiltonianTable t;
    t.regime = Regime::supercritical;
    t.n = 1;
    t.x_grid = Grid::box1d(-4.0, 4.0, 0.03125);
    t.p_grid = Grid::box1d(-5.0, 5.0, 0.01);
    t.values.resize(static_cast<std::size_t>(t.x_grid.size()) * t.p_grid.size());
    t.diagnostic.assign(t.values.size(), 1e-12);
    for (int ix = 0; ix < t.x_grid.size(); ++ix)
        for (int ip = 0; ip < t.p_grid.size(); ++ip) {
            const double p = t.p_grid.coord1(ip);
            t.values[static_cast<std::size_t>(ix) * t.p_grid.size() + ip] = c * p * p;
        }
    return legendre_transform_all(t, Grid::box1d(-10.0, 10.0, 0.05));
}

}  // namespace

TEST_CASE("convergence_study rejects short or non-decreasing eps lists") {
    const ModelSpec s = ou1d();
    const Payoff h = make_payoff("constant", {{"c", 1.0}}, 1);
    EffectiveHamiltonianTable t;
    t.n = 1;
    t.x_grid = Grid::box1d(-1.0, 1.0, 1.0);
    t.p_grid = Grid::box1d(-1.0, 1.0, 0.5);
    t.values.assign(static_cast<std::size_t>(t.x_grid.size()) * t.p_grid.size(), 0.0);
    t.diagnostic.assign(t.values.size(), 1e-12);
    const HJSolution limit = solve_effective_hj(t, h, 0.1, Grid::box1d(-2.0, 2.0, 0.1), 0.8);
    const double z = 0.0;
    ConvergenceOptions opt;
    opt.run_pde = false;
    opt.mc.n_paths = 100;
    const std::vector<double> two = {0.2, 0.1};
    CHECK_THROWS_AS(
        convergence_study(s, h, 0.1, {&z, 1}, {&z, 1}, two, limit, opt), PreconditionError);
    const std::vector<double> bad = {0.2, 0.3, 0.1};
    CHECK_THROWS_AS(
        convergence_study(s, h, 0.1, {&z, 1}, {&z, 1}, bad, limit, opt), PreconditionError);
}

TEST_CASE("constant payoff: all deviations vanish within MC error") {
    const ModelSpec s = ou1d();
    const Payoff h = make_payoff("constant", {{"c", 0.8}}, 1);
    EffectiveHamiltonianTable t;
    t.n = 1;
    t.x_grid = Grid::box1d(-1.0, 1.0, 1.0);
    t.p_grid = Grid::box1d(-2.0, 2.0, 0.25);
    t.values.assign(static_cast<std::size_t>(t.x_grid.size()) * t.p_grid.size(), 0.0);
    t.diagnostic.assign(t.values.size(), 1e-12);
    for (int ix = 0; ix < t.x_grid.size(); ++ix)
        for (int ip = 0; ip < t.p_grid.size(); ++ip) {
            const double p = t.p_grid.coord1(ip);
            t.values[static_cast<std::size_t>(ix) * t.p_grid.size() + ip] = p * p;
        }
    const HJSolution limit = solve_effective_hj(t, h, 0.25, Grid::box1d(-3.0, 3.0, 0.05), 0.8);
    const double z = 0.0;
    ConvergenceOptions opt;
    opt.run_pde = false;
    opt.mc.n_paths = 4000;
    const std::vector<double> eps = {0.4, 0.2, 0.1};
    const ConvergenceStudy st = convergence_study(s, h, 0.25, {&z, 1}, {&z, 1}, eps, limit, opt);
    for (const auto& r : st.rows) CHECK(r.dev_mc <= 1e-10);
}

TEST_CASE("ldp_check: rate_inf is attained on the boundary for quadratic L") {
    const EffectiveLagrangianTable lag = quad_lagrangian(1.0);
    const ModelSpec s = ou1d(2.0, 1.0, 0.0);
    TargetSet B;
    B.kind = TargetSet::Kind::half_space;
    B.normal = {1.0};
    B.level = 1.0;
    const double z = 0.0;
    LdpOptions opt;
    opt.mc.n_paths = 20000;
    opt.mc.seed = 31;
    const std::vector<double> eps = {0.4, 0.3, 0.2};
    const LDPReport rep = ldp_check(s, B, 1.0, {&z, 1}, {&z, 1}, eps, lag, opt);
    // I(x) = x^2/4; inf over [1, inf) sits at the boundary point 1
    CHECK(std::abs(rep.rate_inf - 0.25) <= 1e-3);
    CHECK(rep.rows.size() == 3);
    for (const auto& r : rep.rows) CHECK(r.p_hat > 0.0);
}

TEST_CASE("ldp_check preconditions: x0 inside B, short eps lists") {
    const EffectiveLagrangianTable lag = quad_lagrangian(1.0);
    const ModelSpec s = ou1d();
    TargetSet B;
    B.kind = TargetSet::Kind::half_space;
    B.normal = {1.0};
    B.level = -1.0;  // contains x0 = 0
    const double z = 0.0;
    LdpOptions opt;
    const std::vector<double> eps = {0.4, 0.3, 0.2};
    CHECK_THROWS_AS(ldp_check(s, B, 1.0, {&z, 1}, {&z, 1}, eps, lag, opt), PreconditionError);
    B.level = 1.0;
    const std::vector<double> two = {0.4, 0.3};
    CHECK_THROWS_AS(ldp_check(s, B, 1.0, {&z, 1}, {&z, 1}, two, lag, opt), PreconditionError);
}

TEST_CASE("ldp_check goes inconclusive when the budget cannot resolve the tail") {
    const EffectiveLagrangianTable lag = quad_lagrangian(1.0);
    const ModelSpec s = ou1d(2.0, 1.0, 0.0);
    TargetSet B;
    B.kind = TargetSet::Kind::half_space;
    B.normal = {1.0};
    B.level = 3.5;  // I = 3.06; p ~ e^{-30} at eps = 0.1
    const double z = 0.0;
    LdpOptions opt;
    opt.mc.n_paths = 2000;
    const std::vector<double> eps = {0.15, 0.12, 0.1};
    const LDPReport rep = ldp_check(s, B, 1.0, {&z, 1}, {&z, 1}, eps, lag, opt);
    CHECK(rep.verdict == LDPReport::Verdict::inconclusive);
}
