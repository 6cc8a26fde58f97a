#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "svhom/effham.hpp"
#include "svhom/epspde.hpp"
#include "svhom/hj.hpp"
#include "svhom/sde_mc.hpp"

namespace svhom {

struct ConvergenceRow {
    double eps = 0.0;
    double v_mc = 0.0;
    double se_mc = 0.0;
    std::optional<double> v_pde;
    double v_limit = 0.0;
    double dev_mc = 0.0;
    std::optional<double> dev_pde;
    bool usable = true;  // false when the MC estimate is degenerate
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;  // sorted by decreasing eps
    bool monotone_pass = false;        // at most one inversion within 2 SE
    int inversions = 0;
    double ratio_last_first = 0.0;     // dev(eps_min) / dev(eps_max)
};

struct ConvergenceOptions {
    McOptions mc;
    bool run_pde = true;
    double pde_dt = 1e-3;
    const Grid* pde_grid = nullptr;  // required when run_pde and n = m = 1
};

// |v^eps - v| per eps against the limit HJ solution at (t, x); MC always,
// eps-PDE when n = m = 1.
ConvergenceStudy convergence_study(const ModelSpec& spec, const Payoff& h, double t,
                                   std::span<const double> x, std::span<const double> y,
                                   std::span<const double> eps_list, const HJSolution& limit,
                                   const ConvergenceOptions& opt);

struct LDPRow {
    double eps = 0.0;
    double p_hat = 0.0;
    double std_error = 0.0;
    double eps_log_p = 0.0;
    bool usable = true;
};

struct LDPReport {
    std::string b_description;
    double t = 0.0;
    std::vector<double> x0;
    std::vector<LDPRow> rows;  // sorted by decreasing eps
    double rate_inf = 0.0;     // inf over B of I(.; x0, t) on the grid
    double fit_slope = 0.0;    // least squares of log p_hat against 1/eps
    enum class Verdict { pass, fail, inconclusive } verdict = Verdict::inconclusive;
    double band = 0.15;        // acceptance choice recorded in the report
};

struct LdpOptions {
    McOptions mc;
    int k_steps = 16;
};

// Tail probabilities across the eps sweep against the rate-function infimum;
// verdict passes iff |fit_slope + rate_inf| <= band * rate_inf over >= 3
// usable rows.
LDPReport ldp_check(const ModelSpec& spec, const TargetSet& B, double t,
                    std::span<const double> x0, std::span<const double> y0,
                    std::span<const double> eps_list, const EffectiveLagrangianTable& lag,
                    const LdpOptions& opt);

}  // namespace svhom
