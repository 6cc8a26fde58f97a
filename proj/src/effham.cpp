#include "svhom/effham.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svhom/linalg.hpp"
#include "svhom/parallel.hpp"

namespace svhom {

double EffectiveHamiltonianTable::interp_p(int ix, std::span<const double> p) const {
    return interp_multilinear(
        p_grid,
        std::span<const double>(values.data() + static_cast<std::size_t>(ix) * p_size(),
                                static_cast<std::size_t>(p_size())),
        p);
}

double EffectiveHamiltonianTable::max_slope(int ix, int d) const {
    const double* row = values.data() + static_cast<std::size_t>(ix) * p_size();
    double mx = 0.0;
    const int n0 = p_grid.axis_nodes(0);
    if (p_grid.dim() == 1) {
        for (int j = 0; j + 1 < n0; ++j) mx = std::max(mx, std::abs(row[j + 1] - row[j]));
        return mx / p_grid.h();
    }
    const int n1 = p_grid.axis_nodes(1);
    for (int a = 0; a < n0; ++a)
        for (int b = 0; b < n1; ++b) {
            if (d == 0 && a + 1 < n0)
                mx = std::max(mx, std::abs(row[(a + 1) * n1 + b] - row[a * n1 + b]));
            if (d == 1 && b + 1 < n1)
                mx = std::max(mx, std::abs(row[a * n1 + b + 1] - row[a * n1 + b]));
        }
    return mx / p_grid.h();
}

double EffectiveLagrangianTable::interp_q(int ix, std::span<const double> q) const {
    const Grid& g = q_grid;
    const double* row = values.data() + static_cast<std::size_t>(ix) * g.size();
    int i0[2] = {0, 0};
    double t[2] = {0.0, 0.0};
    for (int d = 0; d < g.dim(); ++d) {
        if (q[d] < g.axis_lo(d) - 1e-12 || q[d] > g.axis_hi(d) + 1e-12) return kInfCost;
        const double s = (q[d] - g.axis_lo(d)) / g.h();
        int i = static_cast<int>(std::floor(s));
        i = std::min(std::max(i, 0), g.axis_nodes(d) - 2);
        i0[d] = i;
        t[d] = std::min(std::max(s - i, 0.0), 1.0);
    }
    if (g.dim() == 1) {
        const double a = row[i0[0]], b = row[i0[0] + 1];
        if (a >= kInfCost || b >= kInfCost) return kInfCost;
        return a * (1.0 - t[0]) + b * t[0];
    }
    const int s1 = g.axis_nodes(1);
    const double v[4] = {row[i0[0] * s1 + i0[1]], row[i0[0] * s1 + i0[1] + 1],
                         row[(i0[0] + 1) * s1 + i0[1]], row[(i0[0] + 1) * s1 + i0[1] + 1]};
    for (double vv : v)
        if (vv >= kInfCost) return kInfCost;
    return (1.0 - t[0]) * ((1.0 - t[1]) * v[0] + t[1] * v[1]) +
           t[0] * ((1.0 - t[1]) * v[2] + t[1] * v[3]);
}

namespace {

// inf/sup of |sigma(x,y)^T p|^2 over a y sample set, via the quadratic form
// p^T (sigma sigma^T)(x,y) p.
struct SigmaQuadRange {
    std::vector<double> gram;  // per y-sample: n*n row-major sigma sigma^T
    int n;

    void build(const ModelSpec& spec, std::span<const double> x,
               std::span<const std::vector<double>> ys) {
        n = spec.n;
        gram.resize(ys.size() * static_cast<std::size_t>(n) * n);
        std::vector<double> sv(static_cast<std::size_t>(spec.n) * spec.m);
        for (std::size_t s = 0; s < ys.size(); ++s) {
            spec.sigma(x, ys[s], sv);
            mat_abt(sv, spec.n, spec.m, sv, spec.n,
                    std::span<double>(gram.data() + s * n * n, static_cast<std::size_t>(n) * n));
        }
    }

    void minmax(std::span<const double> p, double& mn, double& mx) const {
        mn = 1e300;
        mx = -1e300;
        const std::size_t cnt = gram.size() / (static_cast<std::size_t>(n) * n);
        for (std::size_t s = 0; s < cnt; ++s) {
            const double* Gp = gram.data() + s * n * n;
            double v = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) v += p[i] * Gp[i * n + j] * p[j];
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
    }
};

std::vector<std::vector<double>> grid_nodes(const Grid& g) {
    std::vector<std::vector<double>> pts(g.size());
    for (int i = 0; i < g.size(); ++i) {
        pts[i].resize(g.dim());
        g.coords(i, pts[i]);
    }
    return pts;
}

void check_convexity(const EffectiveHamiltonianTable& t, double tol, double* worst,
                     bool throw_on_fail) {
    double w = 0.0;
    const int psz = t.p_size();
    const int n0 = t.p_grid.axis_nodes(0);
    const int n1 = t.p_grid.dim() == 2 ? t.p_grid.axis_nodes(1) : 1;
    for (int ix = 0; ix < t.x_grid.size(); ++ix) {
        const double* row = t.values.data() + static_cast<std::size_t>(ix) * psz;
        for (int a = 0; a < n0; ++a)
            for (int b = 0; b < n1; ++b) {
                const int j = t.p_grid.dim() == 1 ? a : a * n1 + b;
                if (a > 0 && a + 1 < n0) {
                    const int s = t.p_grid.dim() == 1 ? 1 : n1;
                    const double d2 = row[j + s] - 2.0 * row[j] + row[j - s];
                    w = std::min(w, d2);
                    if (throw_on_fail && d2 < -tol)
                        throw NumericalError("tabulate_H: convexity violated at x-node " +
                                             std::to_string(ix) + ", p-node " + std::to_string(j));
                }
                if (t.p_grid.dim() == 2 && b > 0 && b + 1 < n1) {
                    const double d2 = row[j + 1] - 2.0 * row[j] + row[j - 1];
                    w = std::min(w, d2);
                    if (throw_on_fail && d2 < -tol)
                        throw NumericalError("tabulate_H: convexity violated at x-node " +
                                             std::to_string(ix) + ", p-node " + std::to_string(j));
                }
            }
    }
    if (worst) *worst = w;
}

}  // namespace

EffectiveHamiltonianTable tabulate_H(const ModelSpec& spec, Regime regime, const Grid& x_grid,
                                     const Grid& p_grid, const FastGrid& cell_grid,
                                     const TabulateOptions& opt) {
    require(x_grid.dim() == spec.n && p_grid.dim() == spec.n,
            "tabulate_H: x/p grids must match the slow dimension");
    require(spec.n <= 2, "tabulate_H: n >= 3 not supported");
    require(x_grid.size() >= 1 && p_grid.size() >= 1, "tabulate_H: empty grids");

    EffectiveHamiltonianTable t;
    t.regime = regime;
    t.n = spec.n;
    t.x_grid = x_grid;
    t.p_grid = p_grid;
    const int nx = x_grid.size();
    const int np = p_grid.size();
    t.values.assign(static_cast<std::size_t>(nx) * np, 0.0);
    t.diagnostic.assign(static_cast<std::size_t>(nx) * np, 0.0);

    const auto xs = grid_nodes(x_grid);
    const auto ps = grid_nodes(p_grid);

    if (regime == Regime::supercritical) {
        const InvariantMeasureField mu = solve_stationary_fp(spec, cell_grid);
        parallel_for(nx * np, opt.threads, [&](int k) {
            const int ix = k / np, ip = k % np;
            t.values[k] = effective_h_super(spec, xs[ix], ps[ip], mu);
            t.diagnostic[k] = std::max(mu.residual, 1e-12);
        });
    } else {
        parallel_for(nx * np, opt.threads, [&](int k) {
            const int ix = k / np, ip = k % np;
            const CorrectorField cf = vanishing_discount(spec, xs[ix], ps[ip], Regime::critical,
                                                         opt.deltas, cell_grid);
            t.values[k] = cf.lambda;
            t.diagnostic[k] = std::max(cf.cauchy_last, 1e-12);
        });
    }

    // eq-bounds over the cell grid nodes, tolerance 1e-6
    const auto ys = grid_nodes(cell_grid.grid);
    for (int ix = 0; ix < nx; ++ix) {
        SigmaQuadRange rng;
        rng.build(spec, xs[ix], ys);
        for (int ip = 0; ip < np; ++ip) {
            double mn, mx;
            rng.minmax(ps[ip], mn, mx);
            const double v = t.at(ix, ip);
            if (v < mn - 1e-6 || v > mx + 1e-6)
                throw NumericalError("tabulate_H: eq-bounds violated at x-node " +
                                     std::to_string(ix) + ", p-node " + std::to_string(ip) +
                                     " (H=" + std::to_string(v) + ", range [" +
                                     std::to_string(mn) + ", " + std::to_string(mx) + "])");
        }
    }

    // H(x, 0) = 0 on the p = 0 node when present
    for (int ip = 0; ip < np; ++ip) {
        if (norm_inf(ps[ip]) < 1e-14) {
            for (int ix = 0; ix < nx; ++ix)
                if (std::abs(t.at(ix, ip)) > 1e-9)
                    throw NumericalError("tabulate_H: H(x,0) != 0 at x-node " + std::to_string(ix));
        }
    }

    check_convexity(t, 1e-8, nullptr, /*throw_on_fail=*/true);
    return t;
}

PropertyReport property_suite(const EffectiveHamiltonianTable& table, const ModelSpec& spec,
                              std::span<const double> y_sample_axis) {
    require(y_sample_axis.size() >= 50, "property_suite: y_sample needs >= 50 points per axis");
    PropertyReport rep;

    // y sample set (tensor in 2D)
    std::vector<std::vector<double>> ys;
    if (spec.m == 1) {
        for (double y : y_sample_axis) ys.push_back({y});
    } else {
        for (double y0 : y_sample_axis)
            for (double y1 : y_sample_axis) ys.push_back({y0, y1});
    }

    const auto xs = grid_nodes(table.x_grid);
    const auto ps = grid_nodes(table.p_grid);
    const int nx = table.x_grid.size();
    const int np = table.p_size();

    std::vector<SigmaQuadRange> rng(nx);
    for (int ix = 0; ix < nx; ++ix) rng[ix].build(spec, xs[ix], ys);

    // (c) bounds with per-node tolerance 2 x diagnostic + rounding floor
    rep.bounds_pass = true;
    rep.worst_bounds_margin = 1e300;
    for (int ix = 0; ix < nx; ++ix)
        for (int ip = 0; ip < np; ++ip) {
            double mn, mx;
            rng[ix].minmax(ps[ip], mn, mx);
            const double tol = 2.0 * table.diag_at(ix, ip) + 1e-9 * (1.0 + mx);
            const double margin = std::min(table.at(ix, ip) - (mn - tol),
                                           (mx + tol) - table.at(ix, ip));
            rep.worst_bounds_margin = std::min(rep.worst_bounds_margin, margin);
            if (margin < 0.0) rep.bounds_pass = false;
        }

    // (b) discrete convexity
    check_convexity(table, 0.0, &rep.worst_convexity, false);
    rep.convexity_pass = rep.worst_convexity >= -1e-8;

    // H(x,0) = 0
    rep.zero_row_pass = true;
    for (int ip = 0; ip < np; ++ip)
        if (norm_inf(ps[ip]) < 1e-14)
            for (int ix = 0; ix < nx; ++ix)
                if (std::abs(table.at(ix, ip)) > 1e-9) rep.zero_row_pass = false;

    // (a) continuity modulus across neighbors (reported, not gated)
    double mod = 0.0;
    for (int ix = 0; ix < nx; ++ix)
        for (int ip = 0; ip < np; ++ip) {
            if (ip + 1 < np) {
                double dp = 0.0;
                for (int d = 0; d < table.n; ++d) dp += std::abs(ps[ip + 1][d] - ps[ip][d]);
                if (dp > 0.0)
                    mod = std::max(mod, std::abs(table.at(ix, ip + 1) - table.at(ix, ip)) / dp);
            }
            if (ix + 1 < nx) {
                double dx = 0.0;
                for (int d = 0; d < table.n; ++d) dx += std::abs(xs[ix + 1][d] - xs[ix][d]);
                if (dx > 0.0)
                    mod = std::max(mod, std::abs(table.at(ix + 1, ip) - table.at(ix, ip)) / dx);
            }
        }
    rep.continuity_modulus = mod;

    // (d) semi-homogeneity: mu H(x, p/mu) - H(z, q) >= sup_y |s(x)^T p - s(z)^T q|^2 / (mu - 1)
    // over pairs with r = p/mu and p both on the p-grid. Pair count is
    // subsampled in 2D to keep the sweep desk-scale.
    rep.semihomo_pass = true;
    rep.worst_semihomo_margin = 1e300;
    const double mus[3] = {0.25, 0.5, 0.75};
    const int stride_pairs = table.n == 1 ? 1 : 7;
    const std::size_t nys = ys.size();
    // sig[ix][s] = sigma(x_ix, y_s), flattened n*m blocks
    std::vector<double> sig(static_cast<std::size_t>(nx) * nys * spec.n * spec.m);
    {
        std::vector<double> sv(static_cast<std::size_t>(spec.n) * spec.m);
        for (int ix = 0; ix < nx; ++ix)
            for (std::size_t s = 0; s < nys; ++s) {
                spec.sigma(xs[ix], ys[s], sv);
                std::copy(sv.begin(), sv.end(),
                          sig.begin() + ((static_cast<std::size_t>(ix) * nys + s) * spec.n * spec.m));
            }
    }
    std::vector<double> sp(spec.m), sq(spec.m);
    for (double mu : mus) {
        for (int ix = 0; ix < nx; ++ix)
            for (int ir = 0; ir < np; ++ir) {
                std::vector<double> p(table.n);
                bool on_grid = true;
                for (int d = 0; d < table.n; ++d) {
                    p[d] = mu * ps[ir][d];
                    const double s = (p[d] - table.p_grid.axis_lo(d)) / table.p_grid.h();
                    if (std::abs(s - std::lround(s)) > 1e-9) on_grid = false;
                }
                if (!on_grid) continue;
                const double lhs_a = mu * table.at(ix, ir);
                for (int iz = 0; iz < nx; ++iz)
                    for (int iq = 0; iq < np; iq += stride_pairs) {
                        double sup = 0.0;
                        for (std::size_t s = 0; s < nys; ++s) {
                            const double* sx =
                                sig.data() + (static_cast<std::size_t>(ix) * nys + s) * spec.n * spec.m;
                            const double* sz =
                                sig.data() + (static_cast<std::size_t>(iz) * nys + s) * spec.n * spec.m;
                            mat_t_vec(std::span<const double>(sx, static_cast<std::size_t>(spec.n) * spec.m),
                                      spec.n, spec.m, p, sp);
                            mat_t_vec(std::span<const double>(sz, static_cast<std::size_t>(spec.n) * spec.m),
                                      spec.n, spec.m, ps[iq], sq);
                            double dsq = 0.0;
                            for (int d = 0; d < spec.m; ++d)
                                dsq += (sp[d] - sq[d]) * (sp[d] - sq[d]);
                            sup = std::max(sup, dsq);
                        }
                        const double rhs = sup / (mu - 1.0);
                        const double tol = 2.0 * std::max(table.diag_at(ix, ir), table.diag_at(iz, iq)) +
                                           1e-9 * (1.0 + std::abs(lhs_a) + std::abs(rhs));
                        const double margin = lhs_a - table.at(iz, iq) - rhs + tol;
                        rep.worst_semihomo_margin = std::min(rep.worst_semihomo_margin, margin);
                        ++rep.semihomo_pairs;
                        if (margin < 0.0) rep.semihomo_pass = false;
                    }
            }
    }
    return rep;
}

void legendre_transform(const EffectiveHamiltonianTable& table, int x_index, const Grid& q_grid,
                        EffectiveLagrangianTable& out) {
    require(q_grid.dim() == table.n, "legendre_transform: q grid dimension mismatch");
    const int np = table.p_size();
    const auto ps = grid_nodes(table.p_grid);
    const double* row = table.values.data() + static_cast<std::size_t>(x_index) * np;

    // attainable slope box from one-sided differences along each axis
    double slope_lo[2] = {1e300, 1e300}, slope_hi[2] = {-1e300, -1e300};
    const int n0 = table.p_grid.axis_nodes(0);
    const int n1 = table.p_grid.dim() == 2 ? table.p_grid.axis_nodes(1) : 1;
    for (int a = 0; a < n0; ++a)
        for (int b = 0; b < n1; ++b) {
            const int j = table.p_grid.dim() == 1 ? a : a * n1 + b;
            if (a + 1 < n0) {
                const int s = table.p_grid.dim() == 1 ? 1 : n1;
                const double sl = (row[j + s] - row[j]) / table.p_grid.h();
                slope_lo[0] = std::min(slope_lo[0], sl);
                slope_hi[0] = std::max(slope_hi[0], sl);
            }
            if (table.p_grid.dim() == 2 && b + 1 < n1) {
                const double sl = (row[j + 1] - row[j]) / table.p_grid.h();
                slope_lo[1] = std::min(slope_lo[1], sl);
                slope_hi[1] = std::max(slope_hi[1], sl);
            }
        }

    const int nq = q_grid.size();
    double* lrow = out.values.data() + static_cast<std::size_t>(x_index) * nq;
    std::vector<double> q(table.n);
    for (int iq = 0; iq < nq; ++iq) {
        q_grid.coords(iq, q);
        bool attainable = true;
        for (int d = 0; d < table.n; ++d)
            if (q[d] < slope_lo[d] - 1e-12 || q[d] > slope_hi[d] + 1e-12) attainable = false;
        if (!attainable) {
            lrow[iq] = EffectiveLagrangianTable::kInfCost;
            continue;
        }
        double best = -1e300;
        for (int ip = 0; ip < np; ++ip) {
            double s = -row[ip];
            for (int d = 0; d < table.n; ++d) s += ps[ip][d] * q[d];
            best = std::max(best, s);
        }
        lrow[iq] = best;
    }
}

EffectiveHamiltonianTable resample_x(const EffectiveHamiltonianTable& table, const Grid& new_x) {
    require(new_x.dim() == table.n, "resample_x: dimension mismatch");
    EffectiveHamiltonianTable out;
    out.regime = table.regime;
    out.n = table.n;
    out.x_grid = new_x;
    out.p_grid = table.p_grid;
    const int np = table.p_size();
    out.values.assign(static_cast<std::size_t>(new_x.size()) * np, 0.0);
    out.diagnostic.assign(out.values.size(), 0.0);

    if (table.x_grid.size() == 1) {
        // x-independent table: constant extension
        for (int ix = 0; ix < new_x.size(); ++ix)
            for (int ip = 0; ip < np; ++ip) {
                out.values[static_cast<std::size_t>(ix) * np + ip] = table.at(0, ip);
                out.diagnostic[static_cast<std::size_t>(ix) * np + ip] = table.diag_at(0, ip);
            }
        return out;
    }

    std::vector<double> xc(table.n);
    std::vector<double> col(table.x_grid.size());
    for (int ix = 0; ix < new_x.size(); ++ix) {
        new_x.coords(ix, xc);
        require(table.x_grid.contains(xc, 1e-9), "resample_x: new grid leaves the table box");
        for (int ip = 0; ip < np; ++ip) {
            for (int jx = 0; jx < table.x_grid.size(); ++jx) col[jx] = table.at(jx, ip);
            out.values[static_cast<std::size_t>(ix) * np + ip] =
                interp_multilinear(table.x_grid, col, xc);
            for (int jx = 0; jx < table.x_grid.size(); ++jx) col[jx] = table.diag_at(jx, ip);
            out.diagnostic[static_cast<std::size_t>(ix) * np + ip] =
                interp_multilinear(table.x_grid, col, xc);
        }
    }
    return out;
}

EffectiveLagrangianTable legendre_transform_all(const EffectiveHamiltonianTable& table,
                                                const Grid& q_grid) {
    EffectiveLagrangianTable out;
    out.n = table.n;
    out.x_grid = table.x_grid;
    out.q_grid = q_grid;
    out.values.assign(static_cast<std::size_t>(table.x_grid.size()) * q_grid.size(), 0.0);
    for (int ix = 0; ix < table.x_grid.size(); ++ix) legendre_transform(table, ix, q_grid, out);
    return out;
}

}  // namespace svhom
