#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svhom/measure.hpp"
#include "test_models.hpp"

using namespace svhom;
using namespace svhom::testing;

TEST_CASE("ou_analytic_measure solves the stationary Lyapunov equation") {
    {
        const double b = 0.0, tau = 1.0;
        const GaussianMeasure g = ou_analytic_measure({&b, 1}, {&tau, 1}, 1);
        CHECK(g.mean[0] == 0.0);
        CHECK(g.cov[0] == doctest::Approx(1.0));
        CHECK(g.density({&b, 1}) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
    }
    {
        const std::vector<double> b = {1.0, 0.0};
        const std::vector<double> tau = {1.0, 0.0, 0.0, 2.0};
        const GaussianMeasure g = ou_analytic_measure(b, tau, 2);
        CHECK(g.mean[0] == 1.0);
        CHECK(g.cov[0] == doctest::Approx(1.0));
        CHECK(g.cov[3] == doctest::Approx(4.0));
        CHECK(g.cov[1] == doctest::Approx(0.0));
    }
    const double zero = 0.0;
    CHECK_THROWS_AS(ou_analytic_measure({&zero, 1}, {&zero, 1}, 1), NumericalError);
}

TEST_CASE("stationary FP solve matches the standard Gaussian (OU, b = -y)") {
    const ModelSpec s = ou1d();
    const FastGrid grid(1, 8.0, 0.02);
    const InvariantMeasureField mu = solve_stationary_fp(s, grid);
    CHECK(std::abs(mu.mass - 1.0) <= 1e-10);
    for (double v : mu.density) CHECK(v >= 0.0);
    const double at0 = mu.density[grid.grid.center_index()];
    CHECK(at0 == doctest::Approx(0.3989422804014327).epsilon(1e-3 / 0.39));

    const GaussianMeasure ga = ou_analytic_measure(s.b_far, s.tau_far, 1);
    CHECK(l1_distance_to_gaussian(mu, ga) <= 1e-3);
}

TEST_CASE("shifted OU mean: density peaks within one cell of b_far") {
    const ModelSpec s = ou1d(2.0, 1.0, 0.0, /*b_far=*/1.0);
    const FastGrid grid(1, 8.0, 0.05);
    const InvariantMeasureField mu = solve_stationary_fp(s, grid);
    int argmax = 0;
    for (int i = 0; i < grid.size(); ++i)
        if (mu.density[i] > mu.density[argmax]) argmax = i;
    CHECK(std::abs(grid.grid.coord1(argmax) - 1.0) <= grid.h() + 1e-12);
}

TEST_CASE("L1 error against the Gaussian at least halves under h -> h/2") {
    const ModelSpec s = ou1d();
    const GaussianMeasure ga = ou_analytic_measure(s.b_far, s.tau_far, 1);
    const double e1 = l1_distance_to_gaussian(solve_stationary_fp(s, FastGrid(1, 8.0, 0.04)), ga);
    const double e2 = l1_distance_to_gaussian(solve_stationary_fp(s, FastGrid(1, 8.0, 0.02)), ga);
    CHECK(e2 <= 0.55 * e1);
}

TEST_CASE("effective_h_super: constants, zero momentum, bump quadrature oracle") {
    const ModelSpec sconst = ou1d(3.0, 1.7);
    const FastGrid grid(1, 8.0, 0.02);
    const InvariantMeasureField mu_c = solve_stationary_fp(sconst, grid);
    const double x = 0.0, p = 1.3, p0 = 0.0;
    CHECK(effective_h_super(sconst, {&x, 1}, {&p, 1}, mu_c) ==
          doctest::Approx(1.7 * 1.7 * 1.3 * 1.3).epsilon(1e-10));
    CHECK(effective_h_super(sconst, {&x, 1}, {&p0, 1}, mu_c) == doctest::Approx(0.0));

    // sigma^2 = 1 + e^{-y^2} against N(0,1): integral = 1 + 1/sqrt(3)
    const ModelSpec sbump = bump1d(3.0);
    const InvariantMeasureField mu_b = solve_stationary_fp(sbump, grid);
    const double one = 1.0;
    const double h = effective_h_super(sbump, {&x, 1}, {&one, 1}, mu_b);
    CHECK(std::abs(h - (1.0 + 1.0 / std::sqrt(3.0))) <= 1e-3);
}

TEST_CASE("effective_h_super is exactly quadratic under p -> c p") {
    const ModelSpec s = bump1d(3.0);
    const FastGrid grid(1, 8.0, 0.05);
    const InvariantMeasureField mu = solve_stationary_fp(s, grid);
    const double x = 0.0, p = 0.7, cp = 2.0 * 0.7;
    const double h1 = effective_h_super(s, {&x, 1}, {&p, 1}, mu);
    const double h2 = effective_h_super(s, {&x, 1}, {&cp, 1}, mu);
    CHECK(std::abs(h2 - 4.0 * h1) <= 1e-12 * (1.0 + std::abs(h2)));
}

TEST_CASE("effective_h_super lies within the nodal range of |sigma^T p|^2") {
    const ModelSpec s = bump1d(3.0);
    const FastGrid grid(1, 8.0, 0.05);
    const InvariantMeasureField mu = solve_stationary_fp(s, grid);
    const double x = 0.0, p = 1.0;
    const double h = effective_h_super(s, {&x, 1}, {&p, 1}, mu);
    CHECK(h >= 1.0 - 1e-12);  // inf |sigma|^2 = 1
    CHECK(h <= 2.0 + 1e-12);  // sup |sigma|^2 = 2
}

TEST_CASE("stationary FP works on a 2D OU fast process") {
    const ModelSpec s = make_family("ou2d", {{"alpha", 3.0}, {"tau1", 1.0}, {"tau2", 1.5}});
    const FastGrid grid(2, 6.0, 0.15);
    const InvariantMeasureField mu = solve_stationary_fp(s, grid);
    CHECK(std::abs(mu.mass - 1.0) <= 1e-10);
    const GaussianMeasure ga = ou_analytic_measure(s.b_far, s.tau_far, 2);
    CHECK(l1_distance_to_gaussian(mu, ga) <= 2e-2);
}
