#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svhom/model.hpp"
#include "test_models.hpp"

using namespace svhom;
using namespace svhom::testing;

TEST_CASE("validate_model: OU family passes all declared assumptions") {
    const ModelSpec s = ou1d();
    const ValidationReport rep = validate_model(s, 2000, 1);
    CHECK(rep.pass);
    for (const auto& c : rep.checks) CHECK(c.pass);
}

TEST_CASE("validate_model: repelling drift fails (E) with a negative margin") {
    const ModelSpec s = repelling1d();
    const ValidationReport rep = validate_model(s, 2000, 1);
    CHECK_FALSE(rep.pass);
    bool found = false;
    for (const auto& c : rep.checks)
        if (c.name.find("(E)") != std::string::npos) {
            found = true;
            CHECK_FALSE(c.pass);
            CHECK(c.worst_margin < 0.0);
            CHECK_FALSE(c.witness_y.empty());
        }
    CHECK(found);
}

TEST_CASE("validate_model: degenerate tau fails the non-degeneracy check") {
    const ModelSpec s = degenerate_tau1d();
    const ValidationReport rep = validate_model(s, 2000, 1);
    CHECK_FALSE(rep.pass);
    bool found = false;
    for (const auto& c : rep.checks)
        if (c.name.find("unifnondeg") != std::string::npos) {
            found = true;
            CHECK_FALSE(c.pass);
        }
    CHECK(found);
}

TEST_CASE("validate_model: non-finite provider output is a failure with witness") {
    ModelSpec s = ou1d();
    s.b = [](std::span<const double> y, std::span<double> out) {
        out[0] = y[0] > 1.5 ? std::numeric_limits<double>::quiet_NaN() : -y[0];
    };
    s.fast_global_ou = false;
    const ValidationReport rep = validate_model(s, 2000, 1);
    CHECK_FALSE(rep.pass);
}

TEST_CASE("validation is deterministic in (spec, seed, budget)") {
    const ModelSpec s = bump1d();
    const ValidationReport a = validate_model(s, 1500, 9);
    const ValidationReport b = validate_model(s, 1500, 9);
    REQUIRE(a.checks.size() == b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i)
        CHECK(a.checks[i].worst_margin == b.checks[i].worst_margin);
}

TEST_CASE("liapounov_coefficient: midpoint rule and degenerate guard") {
    {
        ModelSpec s = ou1d();
        s.B_ergodic = 1.0;
        s.bounds.tau_sup = 1.0;
        const LiapounovSpec l = liapounov_coefficient(s);
        CHECK(l.a == doctest::Approx(0.25));
        CHECK(l.T_tau == doctest::Approx(1.0));
        CHECK(l.a < s.B_ergodic / (2.0 * l.T_tau));
    }
    {
        ModelSpec s = ou1d();
        s.B_ergodic = 2.0;
        s.bounds.tau_sup = 2.0;
        const LiapounovSpec l = liapounov_coefficient(s);
        CHECK(l.a == doctest::Approx(2.0 / 16.0));
        CHECK(l.a < s.B_ergodic / (2.0 * l.T_tau));
    }
    CHECK_THROWS_AS(liapounov_coefficient(degenerate_tau1d()), NumericalError);
}

TEST_CASE("check_liapounov: OU example diverges, a = 0 and a too large fail") {
    ModelSpec s = ou1d();
    s.B_ergodic = 1.0;  // b = -y gives the sharp constant
    const double xbar = 0.0, pbar = 0.0;
    const std::vector<double> radii = {2.0, 4.0, 6.0, 10.0};

    {
        LiapounovSpec l{0.1, 1.0};
        const LiapounovReport rep = check_liapounov(s, l, {&xbar, 1}, {&pbar, 1}, radii);
        CHECK(rep.pass);
        // G[chi](y) = 0.16 y^2 - 0.2 at p = 0
        CHECK(rep.min_g.back() == doctest::Approx(0.16 * 100.0 - 0.2).epsilon(1e-12));
    }
    {
        LiapounovSpec l{0.0, 1.0};  // chi = 0: no divergence
        const LiapounovReport rep = check_liapounov(s, l, {&xbar, 1}, {&pbar, 1}, radii);
        CHECK_FALSE(rep.pass);
    }
    {
        LiapounovSpec l{0.6, 1.0};  // beyond B/(2T): negative leading coefficient
        const LiapounovReport rep = check_liapounov(s, l, {&xbar, 1}, {&pbar, 1}, radii);
        CHECK_FALSE(rep.pass);
    }
}

TEST_CASE("check_liapounov passes across the admissible a range with |p| <= 1") {
    for (const char* fam : {"ou_constant", "bump"}) {
        const ModelSpec s = make_family(fam, {});
        const LiapounovSpec base = liapounov_coefficient(s);
        const double a_max = s.B_ergodic / (2.0 * base.T_tau);
        const std::vector<double> radii = {2.0, 4.0, 8.0, 16.0, 32.0};
        for (double frac : {0.1, 0.5, 0.9})
            for (double p : {-1.0, -0.3, 0.3, 1.0}) {
                LiapounovSpec l{frac * a_max, base.T_tau};
                const double xb = 0.0;
                const LiapounovReport rep = check_liapounov(s, l, {&xb, 1}, {&p, 1}, radii);
                CHECK(rep.pass);
            }
    }
}

TEST_CASE("estimate_bounds samples and inflates when nothing is declared") {
    ModelSpec s = bump1d();
    s.bounds = CoefficientBounds{};
    estimate_bounds(s, 2000, 3);
    // sup sigma = sqrt(2), inflated by 10%
    CHECK(s.bounds.sigma_sup > std::sqrt(2.0) * 0.99);
    CHECK(s.bounds.sigma_sup < std::sqrt(2.0) * 1.15);
    CHECK(s.bounds.tau_sup == doctest::Approx(1.1).epsilon(0.01));
    CHECK(s.bounds.b_lip > 0.9);
}
