#include "svhom/cell.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svhom/fdops.hpp"
#include "svhom/linalg.hpp"

namespace svhom {

namespace {

void check_grid(const ModelSpec& spec, const FastGrid& grid) {
    require(grid.dim() == spec.m, "cell: grid dimension must equal m");
    require(spec.m <= 2, "cell: m >= 3 not supported");
    require(grid.y_max() > std::max(spec.R_ergodic, spec.R1),
            "cell: Y_max must exceed max(R, R1)");
}

struct NodeFields {
    // Per-node coefficient samples shared by both regimes.
    std::vector<double> f;         // |sigma^T p|^2
    std::vector<double> drift0;    // m per node: b (super) or b + 2 tau sigma^T p (critical)
    std::vector<double> diff;      // m*m per node: tau tau^T
    std::vector<double> tau;       // m*m per node
};

NodeFields sample_fields(const ModelSpec& spec, std::span<const double> xbar,
                         std::span<const double> pbar, const FastGrid& grid,
                         bool with_correlation) {
    const Grid& g = grid.grid;
    const int m = spec.m;
    const int n = g.size();
    NodeFields nf;
    nf.f.resize(n);
    nf.drift0.resize(static_cast<std::size_t>(n) * m);
    nf.diff.resize(static_cast<std::size_t>(n) * m * m);
    nf.tau.resize(static_cast<std::size_t>(n) * m * m);

    std::vector<double> y(m), bv(m), tv(static_cast<std::size_t>(m) * m),
        sv(static_cast<std::size_t>(spec.n) * m), stp(m), corr(m);
    for (int i = 0; i < n; ++i) {
        g.coords(i, y);
        spec.b(y, bv);
        spec.tau(y, tv);
        spec.sigma(xbar, y, sv);
        if (!all_finite(bv) || !all_finite(tv) || !all_finite(sv))
            throw NumericalError("cell: non-finite coefficient at node " + std::to_string(i));
        mat_t_vec(sv, spec.n, m, pbar, stp);
        nf.f[i] = dot(stp, stp);
        mat_abt(tv, m, m, tv, m,
                std::span<double>(nf.diff.data() + static_cast<std::size_t>(i) * m * m,
                                  static_cast<std::size_t>(m) * m));
        std::copy(tv.begin(), tv.end(), nf.tau.begin() + static_cast<std::size_t>(i) * m * m);
        if (with_correlation) {
            matvec(tv, m, m, stp, corr);
            for (int d = 0; d < m; ++d)
                nf.drift0[static_cast<std::size_t>(i) * m + d] = bv[d] + 2.0 * corr[d];
        } else {
            for (int d = 0; d < m; ++d) nf.drift0[static_cast<std::size_t>(i) * m + d] = bv[d];
        }
    }
    return nf;
}

// Discrete maximum principle bounds (inf/sup of the forcing over the grid).
void assert_boundd(const CellSolution& sol, std::span<const double> f) {
    double fmin = 1e300, fmax = -1e300;
    for (double v : f) {
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
    }
    const double slack = 1e-9 * (1.0 + std::abs(fmax)) / sol.delta;
    for (double v : sol.w)
        if (v < -fmin / sol.delta - slack || v > fmax / sol.delta + slack)
            throw NumericalError("cell: discrete solution violates the delta-problem bounds");
}

}  // namespace

std::vector<double> forcing_on_grid(const ModelSpec& spec, std::span<const double> xbar,
                                    std::span<const double> pbar, const FastGrid& grid) {
    return sample_fields(spec, xbar, pbar, grid, false).f;
}

CellSolution solve_cell_super(const ModelSpec& spec, std::span<const double> xbar,
                              std::span<const double> pbar, double delta, const FastGrid& grid) {
    check_grid(spec, grid);
    require(delta > 0.0, "solve_cell_super: delta must be positive");
    const Grid& g = grid.grid;
    const int m = spec.m;

    NodeFields nf = sample_fields(spec, xbar, pbar, grid, false);
    const CsrMatrix A = assemble_neg_generator(
        g,
        [&](int i, std::span<double> out) {
            for (int d = 0; d < m; ++d) out[d] = nf.drift0[static_cast<std::size_t>(i) * m + d];
        },
        [&](int i, std::span<double> out) {
            for (int d = 0; d < m * m; ++d) out[d] = nf.diff[static_cast<std::size_t>(i) * m * m + d];
        });
    if (!A.is_m_matrix(1e-12 * A.max_abs_diag()))
        throw NumericalError("solve_cell_super: discretization lost the M-matrix property");

    CellSolution sol;
    sol.regime = Regime::supercritical;
    sol.xbar.assign(xbar.begin(), xbar.end());
    sol.pbar.assign(pbar.begin(), pbar.end());
    sol.delta = delta;
    sol.grid = grid;
    sol.w = solve_shifted(A, delta, nf.f);
    sol.iterations = 1;

    std::vector<double> r(g.size());
    A.apply(sol.w, r);
    double res = 0.0;
    for (int i = 0; i < g.size(); ++i)
        res = std::max(res, std::abs(delta * sol.w[i] + r[i] - nf.f[i]));
    sol.residual_inf = res;
    if (!(res <= 1e-10 * (1.0 + norm_inf(nf.f) / delta)))
        throw NumericalError("solve_cell_super: linear solve residual " + std::to_string(res));
    sol.lambda_est = delta * sol.w[g.center_index()];
    assert_boundd(sol, nf.f);
    return sol;
}

namespace {

// One-sided/centered gradients at a node for policy improvement.
struct LocalGrads {
    double fwd[2], bwd[2], ctr[2];
};

LocalGrads local_grads(const Grid& g, std::span<const double> w, int node) {
    LocalGrads lg{};
    grad_one_sided(g, w, node, std::span<double>(lg.fwd, static_cast<std::size_t>(g.dim())),
                   std::span<double>(lg.bwd, static_cast<std::size_t>(g.dim())));
    for (int d = 0; d < g.dim(); ++d) lg.ctr[d] = 0.5 * (lg.fwd[d] + lg.bwd[d]);
    return lg;
}

// Drift action of -c.Dw at a node with the hybrid stencil the assembler uses.
double drift_action(const Grid& g, const LocalGrads& lg, std::span<const double> c,
                    std::span<const double> straight_diff, int node) {
    const auto mi = g.multi_index(node);
    double s = 0.0;
    for (int d = 0; d < g.dim(); ++d) {
        const bool lo = mi[d] == 0;
        const bool hi = mi[d] == g.axis_nodes(d) - 1;
        const int st = drift_stencil(c[d], straight_diff[d], g.h(), lo, hi);
        // mirror ghosts make the folded one-sided differences match grad_one_sided
        const double dw = st == 0 ? lg.ctr[d] : (st > 0 ? lg.fwd[d] : lg.bwd[d]);
        s -= c[d] * dw;
    }
    return s;
}

}  // namespace

CellSolution solve_cell_critical(const ModelSpec& spec, std::span<const double> xbar,
                                 std::span<const double> pbar, double delta,
                                 const FastGrid& grid, double tol, int max_iter) {
    check_grid(spec, grid);
    require(spec.regime() == Regime::critical, "solve_cell_critical: alpha must equal 2");
    require(delta > 0.0, "solve_cell_critical: delta must be positive");
    const Grid& g = grid.grid;
    const int m = spec.m;
    const int n = g.size();

    NodeFields nf = sample_fields(spec, xbar, pbar, grid, true);

    // Straight-neighbor diffusion weights (minus |m12| in 2D) drive the
    // centered-vs-upwind decision; must match the assembler.
    std::vector<double> straight(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i) {
        const double* M = nf.diff.data() + static_cast<std::size_t>(i) * m * m;
        const double m12 = m == 2 ? 0.5 * (M[1] + M[2]) : 0.0;
        for (int d = 0; d < m; ++d)
            straight[static_cast<std::size_t>(i) * m + d] =
                (m == 1 ? M[0] : M[d * 2 + d]) - std::abs(m12);
    }

    std::vector<double> a(static_cast<std::size_t>(n) * m, 0.0);  // policy
    std::vector<double> drift(nf.drift0);                         // c0 + 2 tau a
    std::vector<double> w(n, 0.0);

    CellSolution sol;
    sol.regime = Regime::critical;
    sol.xbar.assign(xbar.begin(), xbar.end());
    sol.pbar.assign(pbar.begin(), pbar.end());
    sol.delta = delta;
    sol.grid = grid;

    // Bellman objective at a node for candidate control ac:
    //   Q(ac) = -(c0 + 2 tau ac) . D^{stencil} w + |ac|^2
    const auto q_value = [&](int i, const LocalGrads& lg, std::span<const double> ac,
                             std::span<double> c_out) {
        const double* c0 = nf.drift0.data() + static_cast<std::size_t>(i) * m;
        const double* tv = nf.tau.data() + static_cast<std::size_t>(i) * m * m;
        double ta[2];
        matvec(std::span<const double>(tv, static_cast<std::size_t>(m * m)), m, m, ac,
               std::span<double>(ta, static_cast<std::size_t>(m)));
        for (int d = 0; d < m; ++d) c_out[d] = c0[d] + 2.0 * ta[d];
        return drift_action(g, lg, std::span<const double>(c_out.data(), m),
                            std::span<const double>(straight.data() + static_cast<std::size_t>(i) * m,
                                                    static_cast<std::size_t>(m)),
                            i) +
               dot(ac, ac);
    };

    // Candidate controls: a = tau^T g for g in the one-sided/centered gradient
    // combinations, the drift-annihilating control, zero, and the previous policy.
    const auto improve = [&](int i, const LocalGrads& lg, std::span<double> best_a,
                             std::span<double> best_c) {
        const double* tv = nf.tau.data() + static_cast<std::size_t>(i) * m * m;
        const double* c0 = nf.drift0.data() + static_cast<std::size_t>(i) * m;
        double cand[7][2];
        int ncand = 0;
        const auto push_tau_t = [&](const double* gsel) {
            mat_t_vec(std::span<const double>(tv, static_cast<std::size_t>(m * m)), m, m,
                      std::span<const double>(gsel, static_cast<std::size_t>(m)),
                      std::span<double>(cand[ncand], static_cast<std::size_t>(m)));
            ++ncand;
        };
        if (m == 1) {
            push_tau_t(lg.ctr);
            push_tau_t(lg.fwd);
            push_tau_t(lg.bwd);
        } else {
            push_tau_t(lg.ctr);
            const double g1[2] = {lg.fwd[0], lg.fwd[1]};
            const double g2[2] = {lg.bwd[0], lg.bwd[1]};
            const double g3[2] = {lg.fwd[0], lg.bwd[1]};
            const double g4[2] = {lg.bwd[0], lg.fwd[1]};
            push_tau_t(g1);
            push_tau_t(g2);
            push_tau_t(g3);
            push_tau_t(g4);
        }
        // drift-annihilating control: c0 + 2 tau a = 0
        if (m == 1) {
            if (tv[0] != 0.0) {
                cand[ncand][0] = -c0[0] / (2.0 * tv[0]);
                ++ncand;
            }
        } else {
            const double det = tv[0] * tv[3] - tv[1] * tv[2];
            if (std::abs(det) > 1e-300) {
                cand[ncand][0] = -(tv[3] * c0[0] - tv[1] * c0[1]) / (2.0 * det);
                cand[ncand][1] = -(-tv[2] * c0[0] + tv[0] * c0[1]) / (2.0 * det);
                ++ncand;
            }
        }
        for (int d = 0; d < m; ++d) cand[ncand][d] = a[static_cast<std::size_t>(i) * m + d];
        ++ncand;

        double best = 1e300;
        double cbuf[2];
        for (int k = 0; k < ncand; ++k) {
            const double q = q_value(i, lg, std::span<const double>(cand[k], static_cast<std::size_t>(m)),
                                     std::span<double>(cbuf, static_cast<std::size_t>(m)));
            if (q < best) {
                best = q;
                for (int d = 0; d < m; ++d) {
                    best_a[d] = cand[k][d];
                    best_c[d] = cbuf[d];
                }
            }
        }
        return best;
    };

    // Diffusion-only operator for residual evaluation.
    const CsrMatrix Adiff = assemble_neg_generator(
        g, [&](int, std::span<double> out) { for (int d = 0; d < m; ++d) out[d] = 0.0; },
        [&](int i, std::span<double> out) {
            for (int d = 0; d < m * m; ++d) out[d] = nf.diff[static_cast<std::size_t>(i) * m * m + d];
        });

    std::vector<double> rhs(n), adw(n), w_prev;
    double last_res = 1e300;
    bool first = true;
    for (int it = 1; it <= max_iter; ++it) {
        const CsrMatrix A = assemble_neg_generator(
            g,
            [&](int i, std::span<double> out) {
                for (int d = 0; d < m; ++d) out[d] = drift[static_cast<std::size_t>(i) * m + d];
            },
            [&](int i, std::span<double> out) {
                for (int d = 0; d < m * m; ++d)
                    out[d] = nf.diff[static_cast<std::size_t>(i) * m * m + d];
            });
        if (!A.is_m_matrix(1e-12 * A.max_abs_diag()))
            throw NumericalError("solve_cell_critical: policy matrix lost the M-matrix property");
        for (int i = 0; i < n; ++i)
            rhs[i] = nf.f[i] - dot(std::span<const double>(a.data() + static_cast<std::size_t>(i) * m,
                                                           static_cast<std::size_t>(m)),
                                   std::span<const double>(a.data() + static_cast<std::size_t>(i) * m,
                                                           static_cast<std::size_t>(m)));
        w_prev = w;
        w = solve_shifted(A, delta, rhs);
        sol.iterations = it;

        // Howard values approach the solution from below; a decrease signals
        // a broken monotone structure.
        if (!first) {
            const double scale = 1.0 + norm_inf(w);
            for (int i = 0; i < n; ++i)
                if (w[i] < w_prev[i] - 1e-8 * scale)
                    throw NumericalError(
                        "solve_cell_critical: non-monotone policy values (decrease " +
                        std::to_string(w_prev[i] - w[i]) + " at node " + std::to_string(i) +
                        ", iteration " + std::to_string(it) +
                        "; grid too coarse for the monotone scheme)");
        }

        // Policy improvement + Bellman residual at the new iterate.
        Adiff.apply(w, adw);
        double res = 0.0;
        bool policy_changed = false;
        for (int i = 0; i < n; ++i) {
            const LocalGrads lg = local_grads(g, w, i);
            double na[2], nc[2];
            const double q = improve(i, lg, std::span<double>(na, static_cast<std::size_t>(m)),
                                     std::span<double>(nc, static_cast<std::size_t>(m)));
            res = std::max(res, std::abs(delta * w[i] + adw[i] + q - nf.f[i]));
            for (int d = 0; d < m; ++d) {
                double& ad = a[static_cast<std::size_t>(i) * m + d];
                if (std::abs(na[d] - ad) > 1e-10 * (1.0 + std::abs(na[d]))) policy_changed = true;
                ad = na[d];
                drift[static_cast<std::size_t>(i) * m + d] = nc[d];
            }
        }
        sol.residual_history.push_back(res);
        sol.residual_inf = res;
        first = false;
        // rounding floor: the Bellman residual cannot beat the backward error
        // of the policy solve
        const double floor = 64.0 * 2.22e-16 * (delta + A.inf_norm()) * (1.0 + norm_inf(w));
        if (res <= tol * (1.0 + norm_inf(nf.f)) + floor || !policy_changed) break;
        if (it == max_iter)
            throw NumericalError("solve_cell_critical: max_iter exceeded, last residual " +
                                 std::to_string(res));
        last_res = res;
    }
    (void)last_res;

    sol.w = w;
    sol.lambda_est = delta * w[g.center_index()];
    assert_boundd(sol, nf.f);
    return sol;
}

CorrectorField vanishing_discount(const ModelSpec& spec, std::span<const double> xbar,
                                  std::span<const double> pbar, Regime regime,
                                  std::span<const double> deltas, const FastGrid& grid) {
    require(deltas.size() >= 4, "vanishing_discount: need at least 4 deltas");
    for (std::size_t i = 1; i < deltas.size(); ++i)
        require(deltas[i] < deltas[i - 1], "vanishing_discount: deltas must be strictly decreasing");
    if (regime == Regime::supercritical)
        require(spec.regime() == Regime::supercritical,
                "vanishing_discount: supercritical regime requires alpha > 2");

    std::vector<double> lam(deltas.size());
    CellSolution last;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        last = regime == Regime::supercritical
                   ? solve_cell_super(spec, xbar, pbar, deltas[i], grid)
                   : solve_cell_critical(spec, xbar, pbar, deltas[i], grid);
        lam[i] = last.lambda_est;
    }

    double inc_max = 0.0, inc_last = 0.0, inc_prev = -1.0;
    const double lam_scale = 1.0 + std::abs(lam.back());
    for (std::size_t i = 1; i < lam.size(); ++i) {
        const double inc = std::abs(lam[i] - lam[i - 1]);
        inc_max = std::max(inc_max, inc);
        inc_last = inc;
        if (inc_prev >= 0.0 && inc > inc_prev + 1e-8 * lam_scale)
            throw NumericalError(
                "vanishing_discount: non-Cauchy lambda sequence; use smaller deltas or a "
                "larger grid");
        inc_prev = inc;
    }

    // Least-squares line through the last three (delta, delta w(0)) points.
    const std::size_t k = lam.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = k - 3; i < k; ++i) {
        sx += deltas[i];
        sy += lam[i];
        sxx += deltas[i] * deltas[i];
        sxy += deltas[i] * lam[i];
    }
    const double denom = 3.0 * sxx - sx * sx;
    const double slope = denom != 0.0 ? (3.0 * sxy - sx * sy) / denom : 0.0;
    const double intercept = (sy - slope * sx) / 3.0;

    CorrectorField cf;
    cf.regime = regime;
    cf.xbar.assign(xbar.begin(), xbar.end());
    cf.pbar.assign(pbar.begin(), pbar.end());
    cf.grid = grid;
    cf.lambda = intercept;
    cf.cauchy_max = inc_max;
    cf.cauchy_last = inc_last;
    cf.w = std::move(last.w);
    const double w0 = cf.w[grid.grid.center_index()];
    for (double& v : cf.w) v -= w0;
    return cf;
}

LipschitzReport lipschitz_report(std::span<const CellSolution> solutions) {
    require(solutions.size() >= 3, "lipschitz_report: need >= 3 solutions");
    std::vector<double> ds;
    for (const auto& s : solutions) ds.push_back(s.delta);
    for (const auto& s : solutions) {
        require(s.xbar == solutions[0].xbar && s.pbar == solutions[0].pbar,
                "lipschitz_report: solutions must share (xbar, pbar)");
        require(s.grid.size() == solutions[0].grid.size(),
                "lipschitz_report: solutions must share the grid");
    }
    const double dmax = *std::max_element(ds.begin(), ds.end());
    const double dmin = *std::min_element(ds.begin(), ds.end());
    require(dmax / dmin >= 99.0, "lipschitz_report: deltas must span at least two decades");

    LipschitzReport rep;
    rep.deltas = ds;
    bool all_flat = true;
    for (const auto& s : solutions) {
        const Grid& g = s.grid.grid;
        double mx = 0.0;
        double gr[2];
        for (int i = 0; i < g.size(); ++i) {
            grad_centered(g, s.w, i, std::span<double>(gr, static_cast<std::size_t>(g.dim())));
            mx = std::max(mx, norm2(std::span<const double>(gr, static_cast<std::size_t>(g.dim()))));
        }
        rep.max_gradient.push_back(mx);
        // flat fields: per-cell variation at the rounding level of the field size
        if (mx * g.h() > 1e-8 * (1.0 + norm_inf(s.w))) all_flat = false;
    }
    const double gmax = *std::max_element(rep.max_gradient.begin(), rep.max_gradient.end());
    const double gmin = *std::min_element(rep.max_gradient.begin(), rep.max_gradient.end());
    rep.ratio = all_flat ? 1.0 : gmax / std::max(gmin, 1e-300);
    rep.pass = rep.ratio <= 1.1;
    return rep;
}

GrowthReport growth_check(const FastGrid& grid, std::span<const double> w, double R_ergodic) {
    require(grid.y_max() >= 4.0 * R_ergodic, "growth_check: Y_max must be >= 4 R");
    const Grid& g = grid.grid;
    const double w0 = w[g.center_index()];
    const double half = grid.y_max() / 2.0;
    GrowthReport rep;
    double yc[2];
    for (int i = 0; i < g.size(); ++i) {
        g.coords(i, std::span<double>(yc, static_cast<std::size_t>(g.dim())));
        const double r2 = dot(std::span<const double>(yc, static_cast<std::size_t>(g.dim())),
                              std::span<const double>(yc, static_cast<std::size_t>(g.dim())));
        const double denom = 1.0 + std::log(std::sqrt(r2 + 1.0));
        const double c = std::abs(w[i] - w0) / denom;
        rep.cbar = std::max(rep.cbar, c);
        bool in_half = true;
        for (int d = 0; d < g.dim(); ++d)
            if (std::abs(yc[d]) > half + 1e-12) in_half = false;
        if (in_half) rep.cbar_half = std::max(rep.cbar_half, c);
    }
    rep.pass = std::abs(rep.cbar - rep.cbar_half) <= 0.2 * std::max(rep.cbar, 1e-12);
    return rep;
}

double hopf_cole_crosscheck(const ModelSpec& spec, std::span<const double> xbar,
                            std::span<const double> pbar, const FastGrid& grid) {
    require(spec.m == 1, "hopf_cole_crosscheck: supported in 1D only");
    require(spec.regime() == Regime::critical, "hopf_cole_crosscheck: alpha must equal 2");
    check_grid(spec, grid);
    const Grid& g = grid.grid;
    const int n = g.size();

    NodeFields nf = sample_fields(spec, xbar, pbar, grid, true);
    CsrMatrix A = assemble_neg_generator(
        g,
        [&](int i, std::span<double> out) { out[0] = nf.drift0[i]; },
        [&](int i, std::span<double> out) { out[0] = nf.diff[i]; });

    // (s I - A_op) with A_op u = L u + f u  ->  A + diag(s - f); M-matrix for s > max f.
    double fmax = -1e300;
    for (double v : nf.f) fmax = std::max(fmax, v);
    const double s = fmax + 1.0;
    CsrMatrix M = A;
    for (int i = 0; i < n; ++i)
        for (int k = M.row_ptr[i]; k < M.row_ptr[i + 1]; ++k)
            if (M.col[k] == i) M.val[k] += s - nf.f[i];
    ShiftedSolver solver(M, 0.0, false);

    std::vector<double> u(n, 1.0), au(n);
    double lambda = 0.0;
    const auto apply_op = [&](std::span<const double> x, std::span<double> y) {
        A.apply(x, y);  // y = -L x
        for (int i = 0; i < n; ++i) y[i] = -y[i] + nf.f[i] * x[i];
    };
    for (int it = 0; it < 10000; ++it) {
        std::vector<double> v = solver.solve(u);
        const double rho = dot(v, u) / dot(u, u);
        lambda = s - 1.0 / rho;
        const double nv = norm_inf(v);
        if (nv == 0.0) throw NumericalError("hopf_cole_crosscheck: iteration collapsed");
        for (int i = 0; i < n; ++i) u[i] = v[i] / nv;
        apply_op(u, au);
        double res = 0.0;
        for (int i = 0; i < n; ++i) res = std::max(res, std::abs(au[i] - lambda * u[i]));
        if (res <= 1e-11 * (1.0 + std::abs(lambda))) return lambda;
        if (it == 9999)
            throw NumericalError("hopf_cole_crosscheck: power iteration did not converge");
    }
    return lambda;
}

ConvexFlipResult convex_flip_residual(const CorrectorField& corr, const ModelSpec& spec) {
    require(corr.regime == Regime::critical, "convex_flip_residual: critical regime only");
    const Grid& g = corr.grid.grid;
    const int m = spec.m;
    const int n = g.size();
    NodeFields nf = sample_fields(spec, corr.xbar, corr.pbar, corr.grid, true);

    // tr(tau tau^T D^2 w) with centered differences and mirror ghosts;
    // 2D cross term uses the 4-corner formula away from the boundary.
    const auto second_order = [&](std::span<const double> w, int i) {
        const auto mi = g.multi_index(i);
        const double h2 = g.h() * g.h();
        const double* M = nf.diff.data() + static_cast<std::size_t>(i) * m * m;
        double tr = 0.0;
        for (int d = 0; d < m; ++d) {
            const int stride = (m == 1) ? 1 : (d == 0 ? g.axis_nodes(1) : 1);
            const bool lo = mi[d] == 0;
            const bool hi = mi[d] == g.axis_nodes(d) - 1;
            const double wp = hi ? w[i - stride] : w[i + stride];
            const double wm = lo ? w[i + stride] : w[i - stride];
            tr += (m == 1 ? M[0] : M[d * 2 + d]) * (wp - 2.0 * w[i] + wm) / h2;
        }
        if (m == 2) {
            const bool interior = mi[0] > 0 && mi[0] < g.axis_nodes(0) - 1 && mi[1] > 0 &&
                                  mi[1] < g.axis_nodes(1) - 1;
            if (interior) {
                const int s1 = g.axis_nodes(1);
                const double cross =
                    (w[i + s1 + 1] - w[i + s1 - 1] - w[i - s1 + 1] + w[i - s1 - 1]) / (4.0 * h2);
                tr += (M[1] + M[2]) * cross;
            }
        }
        return tr;
    };

    std::vector<double> neg_w(n);
    for (int i = 0; i < n; ++i) neg_w[i] = -corr.w[i];

    double conv = 0.0, prim = 0.0;
    double q[2], tq[2];
    std::vector<double> y(m), bv(m), tv(static_cast<std::size_t>(m) * m),
        sv(static_cast<std::size_t>(spec.n) * m), stp(m), tstp(m);
    for (int i = 0; i < n; ++i) {
        g.coords(i, y);
        spec.b(y, bv);
        spec.tau(y, tv);
        spec.sigma(corr.xbar, y, sv);
        mat_t_vec(sv, spec.n, m, corr.pbar, stp);
        matvec(tv, m, m, stp, tstp);

        // convex form: -lambda - tr(tau tau^T D^2 v) + H(y, Dv), v = -w,
        // H(y,q) = -b.q + |tau^T q|^2 - 2 (tau sigma^T p).q + |sigma^T p|^2
        grad_centered(g, neg_w, i, std::span<double>(q, static_cast<std::size_t>(m)));
        mat_t_vec(tv, m, m, std::span<const double>(q, static_cast<std::size_t>(m)),
                  std::span<double>(tq, static_cast<std::size_t>(m)));
        double hval = -dot(bv, std::span<const double>(q, static_cast<std::size_t>(m))) +
                      dot(std::span<const double>(tq, static_cast<std::size_t>(m)),
                          std::span<const double>(tq, static_cast<std::size_t>(m))) -
                      2.0 * dot(tstp, std::span<const double>(q, static_cast<std::size_t>(m))) +
                      dot(stp, stp);
        conv = std::max(conv, std::abs(-corr.lambda - second_order(neg_w, i) + hval));

        // concave (primal) form with the same stencils
        grad_centered(g, corr.w, i, std::span<double>(q, static_cast<std::size_t>(m)));
        mat_t_vec(tv, m, m, std::span<const double>(q, static_cast<std::size_t>(m)),
                  std::span<double>(tq, static_cast<std::size_t>(m)));
        double drift_term = 0.0;
        for (int d = 0; d < m; ++d) drift_term += (bv[d] + 2.0 * tstp[d]) * q[d];
        prim = std::max(prim, std::abs(corr.lambda - second_order(corr.w, i) -
                                       dot(std::span<const double>(tq, static_cast<std::size_t>(m)),
                                           std::span<const double>(tq, static_cast<std::size_t>(m))) -
                                       drift_term - dot(stp, stp)));
    }

    ConvexFlipResult res;
    res.convex_residual = conv;
    res.primal_residual = prim;
    res.pass = conv <= 2.0 * prim + 1e-12 * (1.0 + std::abs(corr.lambda));
    return res;
}

}  // namespace svhom
