#include "svhom/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "svhom/linalg.hpp"

namespace svhom {

ConvergenceStudy convergence_study(const ModelSpec& spec, const Payoff& h, double t,
                                   std::span<const double> x, std::span<const double> y,
                                   std::span<const double> eps_list, const HJSolution& limit,
                                   const ConvergenceOptions& opt) {
    require(eps_list.size() >= 3, "convergence_study: eps_list must have length >= 3");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        require(eps_list[i] < eps_list[i - 1], "convergence_study: eps_list must be decreasing");

    ConvergenceStudy st;
    const double v_lim = limit.value_at(x);
    const bool pde_ok = opt.run_pde && spec.n == 1 && spec.m == 1 && opt.pde_grid != nullptr;

    for (double eps : eps_list) {
        ConvergenceRow row;
        row.eps = eps;
        row.v_limit = v_lim;
        const MCEstimate mc = estimate_v_eps(spec, eps, t, x, y, h, opt.mc);
        row.v_mc = mc.value;
        row.se_mc = mc.std_error;
        row.dev_mc = std::abs(mc.value - v_lim);
        row.usable = !mc.degenerate;
        if (pde_ok && eps >= 0.02) {
            EpsPdeOptions po;
            po.dt = opt.pde_dt;
            const EpsPdeSolution ps = solve_eps_pde(spec, eps, h, t, *opt.pde_grid, po);
            row.v_pde = ps.value_at(x[0], y[0]);
            row.dev_pde = std::abs(*row.v_pde - v_lim);
        }
        st.rows.push_back(row);
    }

    // monotone trend over usable rows, allowing one inversion within 2 SE
    st.inversions = 0;
    bool hard_fail = false;
    const ConvergenceRow* prev = nullptr;
    for (const auto& r : st.rows) {
        if (!r.usable) continue;
        if (prev) {
            if (r.dev_mc > prev->dev_mc) {
                ++st.inversions;
                const double se2 = 2.0 * std::hypot(r.se_mc, prev->se_mc);
                if (r.dev_mc - prev->dev_mc > se2) hard_fail = true;
            }
        }
        prev = &r;
    }
    st.monotone_pass = !hard_fail && st.inversions <= 1;

    const ConvergenceRow* first = nullptr;
    const ConvergenceRow* last = nullptr;
    for (const auto& r : st.rows)
        if (r.usable) {
            if (!first) first = &r;
            last = &r;
        }
    st.ratio_last_first =
        (first && last && first->dev_mc > 0.0) ? last->dev_mc / first->dev_mc : 0.0;
    return st;
}

LDPReport ldp_check(const ModelSpec& spec, const TargetSet& B, double t,
                    std::span<const double> x0, std::span<const double> y0,
                    std::span<const double> eps_list, const EffectiveLagrangianTable& lag,
                    const LdpOptions& opt) {
    require(!B.contains(x0), "ldp_check: target set must be at positive distance from x0");
    require(eps_list.size() >= 3, "ldp_check: eps_list must have length >= 3");

    LDPReport rep;
    rep.t = t;
    rep.x0.assign(x0.begin(), x0.end());
    {
        std::ostringstream os;
        if (B.kind == TargetSet::Kind::half_space) {
            os << "halfspace n=(";
            for (double v : B.normal) os << v << " ";
            os << ") level=" << B.level;
        } else {
            os << "box";
        }
        rep.b_description = os.str();
    }

    // rate_inf over B's intersection with the x-grid (the closed target set
    // contains its boundary, so an on-grid boundary point is included)
    const std::vector<double> field = rate_function_field(lag, x0, t, opt.k_steps);
    const Grid& g = lag.x_grid;
    double rinf = 1e300;
    std::vector<double> xc(g.dim());
    for (int i = 0; i < g.size(); ++i) {
        g.coords(i, xc);
        if (B.contains(xc) && field[i] < rinf) rinf = field[i];
    }
    if (rinf >= EffectiveLagrangianTable::kInfCost)
        throw PreconditionError("ldp_check: rate function infinite on the whole target set");
    rep.rate_inf = rinf;

    for (double eps : eps_list) {
        const TailEstimate te = estimate_tail_prob(spec, eps, t, x0, y0, B, opt.mc);
        LDPRow row;
        row.eps = eps;
        row.p_hat = te.prob.value;
        row.std_error = te.prob.std_error;
        row.eps_log_p = te.eps_log;
        row.usable = !te.prob.zero_hits && !te.prob.degenerate;
        rep.rows.push_back(row);
    }

    int usable = 0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : rep.rows)
        if (r.usable) {
            const double xv = 1.0 / r.eps;
            const double yv = std::log(r.p_hat);
            ++usable;
            sx += xv;
            sy += yv;
            sxx += xv * xv;
            sxy += xv * yv;
        }
    if (usable < 3) {
        const bool all_zero = std::all_of(rep.rows.begin(), rep.rows.end(),
                                          [](const LDPRow& r) { return r.p_hat == 0.0; });
        rep.verdict = LDPReport::Verdict::inconclusive;
        if (all_zero) rep.b_description += " [unresolvable at this budget]";
        return rep;
    }
    const double den = usable * sxx - sx * sx;
    rep.fit_slope = (usable * sxy - sx * sy) / den;
    rep.verdict = std::abs(rep.fit_slope + rep.rate_inf) <= rep.band * rep.rate_inf
                      ? LDPReport::Verdict::pass
                      : LDPReport::Verdict::fail;
    return rep;
}

}  // namespace svhom
