#include "svhom/hj.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svhom/linalg.hpp"

namespace svhom {

namespace {

// max |dH/dp_d| over the table row restricted to slopes in [lo, hi]:
// conservative local wave speed for the LLF viscosity.
double local_slope_bound(const EffectiveHamiltonianTable& t, int ix, int d, double lo, double hi) {
    // With convex rows the largest one-sided slope over [lo,hi] is attained at
    // the interval ends; sampling the interpolated slopes there suffices.
    const Grid& pg = t.p_grid;
    const double* row = t.values.data() + static_cast<std::size_t>(ix) * t.p_size();
    const double h = pg.h();
    double mx = 0.0;
    const int n0 = pg.axis_nodes(0);
    const int n1 = pg.dim() == 2 ? pg.axis_nodes(1) : 1;
    const int stride = (pg.dim() == 1) ? 1 : (d == 0 ? n1 : 1);
    const int naxis = d == 0 ? n0 : n1;
    // index window of the axis covering [lo, hi]
    int jlo = static_cast<int>(std::floor((lo - pg.axis_lo(d)) / h));
    int jhi = static_cast<int>(std::ceil((hi - pg.axis_lo(d)) / h));
    jlo = std::min(std::max(jlo, 0), naxis - 2);
    jhi = std::min(std::max(jhi, 1), naxis - 1);
    if (pg.dim() == 1) {
        for (int j = jlo; j < jhi; ++j)
            mx = std::max(mx, std::abs(row[j + 1] - row[j]) / h);
        return mx;
    }
    for (int a = 0; a < n0; ++a)
        for (int b = 0; b < n1; ++b) {
            const int ja = d == 0 ? a : b;
            if (ja < jlo || ja >= jhi) continue;
            const int j = a * n1 + b;
            if ((d == 0 && a + 1 < n0) || (d == 1 && b + 1 < n1))
                mx = std::max(mx, std::abs(row[j + stride] - row[j]) / h);
        }
    return mx;
}

}  // namespace

HJSolution solve_effective_hj(const EffectiveHamiltonianTable& table, const Payoff& h, double T,
                              const Grid& x_grid, double cfl,
                              std::span<const double> snapshot_times) {
    require(cfl > 0.0 && cfl <= 0.9, "solve_effective_hj: cfl must lie in (0, 0.9]");
    require(T >= 0.0, "solve_effective_hj: T must be nonnegative");
    require(x_grid.dim() == table.n, "solve_effective_hj: grid dimension mismatch");
    const int dim = x_grid.dim();
    const int nx = x_grid.size();
    const double hx = x_grid.h();

    HJSolution sol;
    sol.x_grid = x_grid;
    sol.T = T;
    sol.cfl = cfl;
    sol.v0.resize(nx);
    std::vector<double> xc(dim);
    for (int i = 0; i < nx; ++i) {
        x_grid.coords(i, xc);
        sol.v0[i] = h(xc);
    }
    sol.v = sol.v0;
    if (T == 0.0) return sol;

    // CFL from the global table slope (viscosity never exceeds it)
    double alpha_sum = 0.0, alpha_max = 0.0;
    std::vector<double> alpha_glob(dim, 0.0);
    for (int d = 0; d < dim; ++d) {
        double a = 0.0;
        for (int ix = 0; ix < table.x_grid.size(); ++ix) a = std::max(a, table.max_slope(ix, d));
        alpha_glob[d] = a;
        alpha_sum += a;
        alpha_max = std::max(alpha_max, a);
    }
    sol.alpha_visc = alpha_max;
    const double dt_bound = cfl * hx / std::max(2.0 * alpha_sum, 1e-12);
    sol.steps = std::max(1, static_cast<int>(std::ceil(T / dt_bound)));
    sol.dt = T / sol.steps;

    // table H is defined per x node of the table grid; interpolate across the
    // table's own x-grid at the solver's nodes
    std::vector<double> table_xw;  // interpolation weights handled by interp below
    const auto eval_H = [&](std::span<const double> x, std::span<const double> p) {
        if (table.x_grid.size() == 1) return table.interp_p(0, p);
        if (table.n == 1) {
            // linear blend between the two bracketing table x-nodes
            const Grid& xg = table.x_grid;
            double s = (x[0] - xg.axis_lo(0)) / xg.h();
            int i = static_cast<int>(std::floor(s));
            i = std::min(std::max(i, 0), xg.axis_nodes(0) - 2);
            const double t = std::min(std::max(s - i, 0.0), 1.0);
            return (1.0 - t) * table.interp_p(i, p) + t * table.interp_p(i + 1, p);
        }
        // n=2: bilinear over table x nodes
        const Grid& xg = table.x_grid;
        int i0[2];
        double tt[2];
        for (int d = 0; d < 2; ++d) {
            double s = (x[d] - xg.axis_lo(d)) / xg.h();
            int i = static_cast<int>(std::floor(s));
            i = std::min(std::max(i, 0), xg.axis_nodes(d) - 2);
            i0[d] = i;
            tt[d] = std::min(std::max(s - i, 0.0), 1.0);
        }
        const int s1 = xg.axis_nodes(1);
        const double v00 = table.interp_p(i0[0] * s1 + i0[1], p);
        const double v01 = table.interp_p(i0[0] * s1 + i0[1] + 1, p);
        const double v10 = table.interp_p((i0[0] + 1) * s1 + i0[1], p);
        const double v11 = table.interp_p((i0[0] + 1) * s1 + i0[1] + 1, p);
        return (1.0 - tt[0]) * ((1.0 - tt[1]) * v00 + tt[1] * v01) +
               tt[0] * ((1.0 - tt[1]) * v10 + tt[1] * v11);
    };

    const int table_ix_for = 0;  // slope bounds use the widest row
    (void)table_ix_for;

    std::vector<double> vn(nx), qp(2), qm(2), xco(dim);
    std::size_t snap_next = 0;
    for (int k = 0; k < sol.steps; ++k) {
        for (int i = 0; i < nx; ++i) {
            const auto mi = x_grid.multi_index(i);
            double ham_args[2];
            double visc = 0.0;
            for (int d = 0; d < dim; ++d) {
                const int stride = (dim == 1) ? 1 : (d == 0 ? x_grid.axis_nodes(1) : 1);
                const bool lo = mi[d] == 0;
                const bool hi = mi[d] == x_grid.axis_nodes(d) - 1;
                // one-sided at the box edge
                const double wp = hi ? sol.v[i] : sol.v[i + stride];
                const double wm = lo ? sol.v[i] : sol.v[i - stride];
                const double dplus = hi ? (sol.v[i] - sol.v[i - stride]) / hx : (wp - sol.v[i]) / hx;
                const double dminus = lo ? (sol.v[i + stride] - sol.v[i]) / hx : (sol.v[i] - wm) / hx;
                qp[d] = dplus;
                qm[d] = dminus;
                ham_args[d] = 0.5 * (dplus + dminus);
                const double qlo = std::min(dminus, dplus);
                const double qhi = std::max(dminus, dplus);
                if (qlo < table.p_grid.axis_lo(d) - 1e-9 || qhi > table.p_grid.axis_hi(d) + 1e-9)
                    throw NumericalError(
                        "solve_effective_hj: solution slope left the table p-range at step " +
                        std::to_string(k) + "; rebuild the table on a wider p-grid");
                double am = 0.0;
                for (int ti = 0; ti < table.x_grid.size(); ++ti)
                    am = std::max(am, local_slope_bound(table, ti, d, qlo, qhi));
                visc += 0.5 * am * (dplus - dminus);
            }
            x_grid.coords(i, xco);
            const double Hval =
                eval_H(xco, std::span<const double>(ham_args, static_cast<std::size_t>(dim)));
            // floor at 0: the table enforces H >= 0 with H(x,0) = 0, so the
            // true solution is non-decreasing in t
            const double numerical_H = std::max(0.0, Hval + visc);
            vn[i] = sol.v[i] + sol.dt * numerical_H;
        }
        sol.v.swap(vn);
        const double tk = (k + 1) * sol.dt;
        while (snap_next < snapshot_times.size() && snapshot_times[snap_next] <= tk + 1e-12) {
            sol.snapshots.push_back(sol.v);
            sol.snapshot_times.push_back(tk);
            ++snap_next;
        }
    }

    // invariants: v(0,.) = h, v non-decreasing in t, a-priori band
    double h_min = 1e300, h_max = -1e300, H_max = 0.0;
    for (double v : sol.v0) {
        h_min = std::min(h_min, v);
        h_max = std::max(h_max, v);
    }
    for (int ix = 0; ix < table.x_grid.size(); ++ix)
        for (int ip = 0; ip < table.p_size(); ++ip) H_max = std::max(H_max, table.at(ix, ip));
    for (int i = 0; i < nx; ++i) {
        if (sol.v[i] < sol.v0[i] - 1e-12 * (1.0 + std::abs(sol.v0[i])))
            throw NumericalError("solve_effective_hj: v decreased in time (scheme fault)");
        if (sol.v[i] < h_min - 1e-9 || sol.v[i] > h_max + T * H_max + 1e-9)
            throw NumericalError("solve_effective_hj: solution left the a-priori band");
    }
    return sol;
}

double hopf_lax_oracle(double c, const Payoff& h, double t, double x, double y_lo, double y_hi,
                       int ny) {
    require(c > 0.0, "hopf_lax_oracle: c must be positive");
    if (t <= 0.0) throw PreconditionError("hopf_lax_oracle: t must be positive");
    double best = -1e300;
    const double dy = (y_hi - y_lo) / (ny - 1);
    for (int i = 0; i < ny; ++i) {
        const double y = y_lo + i * dy;
        const double val = h(std::span<const double>(&y, 1)) - (x - y) * (x - y) / (4.0 * c * t);
        best = std::max(best, val);
    }
    return best;
}

namespace {

struct DpScratch {
    std::vector<double> cost;
    std::vector<int> pred;
    std::vector<double> prev_cost;
};

// Shared DP core: returns terminal costs and predecessor chains.
void dp_sweep(const EffectiveLagrangianTable& lag, int i0_node, double t, int K,
              DpScratch& s, std::vector<std::vector<int>>* preds) {
    const Grid& g = lag.x_grid;
    const int nx = g.size();
    const double inf = EffectiveLagrangianTable::kInfCost;
    s.prev_cost.assign(nx, inf);
    s.prev_cost[i0_node] = 0.0;
    const double dt = t / K;

    // velocity window: |q| <= q_max componentwise bounds the reachable strip
    double q_max = 0.0;
    for (int d = 0; d < g.dim(); ++d)
        q_max = std::max(q_max, std::max(std::abs(lag.q_grid.axis_lo(d)),
                                         std::abs(lag.q_grid.axis_hi(d))));
    const int window = static_cast<int>(std::ceil(q_max * dt / g.h())) + 1;

    std::vector<double> q(g.dim());
    for (int k = 0; k < K; ++k) {
        s.cost.assign(nx, inf);
        s.pred.assign(nx, -1);
        for (int j = 0; j < nx; ++j) {
            const auto mj = g.multi_index(j);
            double best = inf;
            double best_speed = 0.0;
            int best_pred = -1;
            const int a_lo = std::max(0, mj[0] - window);
            const int a_hi = std::min(g.axis_nodes(0) - 1, mj[0] + window);
            const int b_lo = g.dim() == 2 ? std::max(0, mj[1] - window) : 0;
            const int b_hi = g.dim() == 2 ? std::min(g.axis_nodes(1) - 1, mj[1] + window) : 0;
            for (int a = a_lo; a <= a_hi; ++a)
                for (int b = b_lo; b <= b_hi; ++b) {
                    const int i = g.dim() == 1 ? a : g.index(a, b);
                    if (s.prev_cost[i] >= inf) continue;
                    q[0] = (mj[0] - a) * g.h() / dt;
                    if (g.dim() == 2) q[1] = (mj[1] - b) * g.h() / dt;
                    const double lq = lag.interp_q(i, q);
                    if (lq >= inf) continue;
                    const double c = s.prev_cost[i] + dt * lq;
                    const double speed = norm2(q);
                    // tie-break: smaller step speed, then lexicographic predecessor
                    const bool better =
                        c < best - 1e-14 * (1.0 + std::abs(best)) ||
                        (c <= best + 1e-14 * (1.0 + std::abs(best)) &&
                         (speed < best_speed - 1e-14 ||
                          (std::abs(speed - best_speed) <= 1e-14 && i < best_pred)));
                    if (best_pred < 0 || better) {
                        best = c;
                        best_speed = speed;
                        best_pred = i;
                    }
                }
            s.cost[j] = best_pred >= 0 ? best : inf;
            s.pred[j] = best_pred;
        }
        if (preds) (*preds)[k] = s.pred;
        s.prev_cost = s.cost;
    }
}

}  // namespace

RateFunctionResult rate_function(const EffectiveLagrangianTable& lag, std::span<const double> x0,
                                 std::span<const double> x, double t, int K_steps) {
    require(K_steps >= 8, "rate_function: K_steps must be >= 8");
    require(t > 0.0, "rate_function: t must be positive");
    const Grid& g = lag.x_grid;
    require(g.contains(x0, 1e-12) && g.contains(x, 1e-12),
            "rate_function: endpoints must lie inside the x-grid box");

    const int i0 = g.nearest_index(x0);
    const int i1 = g.nearest_index(x);

    DpScratch s;
    std::vector<std::vector<int>> preds(K_steps);
    dp_sweep(lag, i0, t, K_steps, s, &preds);

    RateFunctionResult res;
    res.x0.assign(x0.begin(), x0.end());
    res.x.assign(x.begin(), x.end());
    res.t = t;
    if (s.cost[i1] >= EffectiveLagrangianTable::kInfCost) {
        res.feasible = false;
        throw NumericalError("rate_function: target unreachable at this slope range");
    }
    res.I = s.cost[i1];

    // backtrack the argmin path
    std::vector<int> nodes(K_steps + 1);
    nodes[K_steps] = i1;
    for (int k = K_steps - 1; k >= 0; --k) nodes[k] = preds[k][nodes[k + 1]];
    res.path_times.resize(K_steps + 1);
    res.path.resize(K_steps + 1);
    for (int k = 0; k <= K_steps; ++k) {
        res.path_times[k] = t * k / K_steps;
        res.path[k].resize(g.dim());
        g.coords(nodes[k], res.path[k]);
    }
    return res;
}

std::vector<double> rate_function_field(const EffectiveLagrangianTable& lag,
                                        std::span<const double> x0, double t, int K_steps) {
    require(K_steps >= 8, "rate_function_field: K_steps must be >= 8");
    const Grid& g = lag.x_grid;
    require(g.contains(x0, 1e-12), "rate_function_field: x0 outside the grid");
    DpScratch s;
    dp_sweep(lag, g.nearest_index(x0), t, K_steps, s, nullptr);
    return s.cost;
}

}  // namespace svhom
