#include "svhom/epspde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svhom/errors.hpp"
#include "svhom/fdops.hpp"

namespace svhom {

namespace {

// Godunov flux for v_t = s2 (v_x)^2 (convex, minimum at 0):
// rarefaction side takes the max over the endpoint slopes, shock side the
// min over the interval (0 if it straddles the parabola vertex).
double godunov_sq(double s2, double dminus, double dplus) {
    if (dminus <= dplus)
        return s2 * std::max(dminus * dminus, dplus * dplus);
    if (dminus >= 0.0 && dplus <= 0.0) return 0.0;
    return s2 * std::min(dminus * dminus, dplus * dplus);
}

}  // namespace

EpsPdeSolution solve_eps_pde(const ModelSpec& spec, double eps, const Payoff& h, double T,
                             const Grid& grid2d, const EpsPdeOptions& opt) {
    require(spec.n == 1 && spec.m == 1, "solve_eps_pde: n = m = 1 required");
    require(grid2d.dim() == 2, "solve_eps_pde: 2D grid required");
    require(eps > 0.0 && eps <= 1.0, "solve_eps_pde: eps must lie in (0, 1]");
    require(eps >= 0.02, "solve_eps_pde: eps below 0.02 rejected (stiffness budget)");
    require(T >= 0.0 && opt.dt > 0.0, "solve_eps_pde: bad parameters");

    const int nx = grid2d.axis_nodes(0);
    const int ny = grid2d.axis_nodes(1);
    const double hx = grid2d.h();
    const double hy = grid2d.h();
    const double alpha = spec.alpha;

    const double fast = std::pow(eps, 1.0 - alpha);          // eps^{1-alpha}
    const double quad = std::pow(eps, -alpha);               // eps^{-alpha}
    const double corr = 2.0 * std::pow(eps, -alpha / 2.0);   // on v_x v_y
    const double cross = 2.0 * std::pow(eps, 1.0 - alpha / 2.0);  // on v_xy

    // coefficient tables on the grid
    std::vector<double> sig(static_cast<std::size_t>(nx) * ny), phi(static_cast<std::size_t>(nx) * ny);
    std::vector<double> bv(ny), tv(ny);
    for (int j = 0; j < ny; ++j) {
        const double y = grid2d.axis_lo(1) + j * hy;
        double bb, tt;
        spec.b(std::span<const double>(&y, 1), std::span<double>(&bb, 1));
        spec.tau(std::span<const double>(&y, 1), std::span<double>(&tt, 1));
        bv[j] = bb;
        tv[j] = tt;
    }
    for (int i = 0; i < nx; ++i) {
        const double x = grid2d.axis_lo(0) + i * hx;
        for (int j = 0; j < ny; ++j) {
            const double y = grid2d.axis_lo(1) + j * hy;
            double sv, pv;
            spec.sigma(std::span<const double>(&x, 1), std::span<const double>(&y, 1),
                       std::span<double>(&sv, 1));
            spec.phi(std::span<const double>(&x, 1), std::span<const double>(&y, 1),
                     std::span<double>(&pv, 1));
            sig[static_cast<std::size_t>(i) * ny + j] = sv;
            phi[static_cast<std::size_t>(i) * ny + j] = pv;
        }
    }

    EpsPdeSolution sol;
    sol.eps = eps;
    sol.alpha = alpha;
    sol.grid = grid2d;
    sol.T = T;
    sol.v0.resize(static_cast<std::size_t>(nx) * ny);
    double smax = 0.0, pmax = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = grid2d.axis_lo(0) + i * hx;
        const double hval = h(std::span<const double>(&x, 1));
        for (int j = 0; j < ny; ++j) sol.v0[static_cast<std::size_t>(i) * ny + j] = hval;
    }
    for (double v : sig) smax = std::max(smax, std::abs(v));
    for (double v : phi) pmax = std::max(pmax, std::abs(v));
    sol.v = sol.v0;
    if (T == 0.0) return sol;

    // recorded explicit stability bounds
    double slope0 = 0.0;
    for (int i = 0; i + 1 < nx; ++i)
        slope0 = std::max(slope0, std::abs(sol.v0[(static_cast<std::size_t>(i) + 1) * ny] -
                                           sol.v0[static_cast<std::size_t>(i) * ny]) /
                                      hx);
    const double slope_budget = 2.0 * slope0 + 1.0;
    const double dt_xdiff = 0.25 * hx * hx / std::max(eps * smax * smax, 1e-12);
    const double dt_xham = 0.25 * hx / std::max(smax * smax * slope_budget + eps * pmax, 1e-12);
    const double dt_cross = 0.25 * hx * hy / std::max(cross * smax, 1e-12);
    const double dt_cap = std::min({opt.dt, dt_xdiff, dt_xham, dt_cross});
    sol.steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(T / dt_cap)));
    sol.dt = T / static_cast<double>(sol.steps);
    const double dt = sol.dt;

    double h_lo = 1e300, h_hi = -1e300;
    for (double v : sol.v0) {
        h_lo = std::min(h_lo, v);
        h_hi = std::max(h_hi, v);
    }

    const auto idx = [ny](int i, int j) { return static_cast<std::size_t>(i) * ny + j; };

    std::vector<double> rhs(static_cast<std::size_t>(nx) * ny);
    std::vector<double> sub(ny), dia(ny), sup(ny), col(ny), cw(ny), dw(ny);
    std::size_t snap_next = 0;

    for (std::int64_t k = 0; k < sol.steps; ++k) {
        const std::vector<double>& v = sol.v;
        double step_ham_max = 0.0;

        // explicit stage
        for (int i = 0; i < nx; ++i) {
            const int im = i > 0 ? i - 1 : 1;          // mirror ghosts
            const int ip = i < nx - 1 ? i + 1 : nx - 2;
            for (int j = 0; j < ny; ++j) {
                const int jm = j > 0 ? j - 1 : 1;
                const int jp = j < ny - 1 ? j + 1 : ny - 2;
                const double s = sig[idx(i, j)];
                const double vx_m = (v[idx(i, j)] - v[idx(im, j)]) / hx * (i > 0 ? 1.0 : -1.0);
                const double vx_p = (v[idx(ip, j)] - v[idx(i, j)]) / hx * (i < nx - 1 ? 1.0 : -1.0);
                const double vy_c = (v[idx(i, jp)] - v[idx(i, jm)]) / (2.0 * hy) *
                                    (j > 0 && j < ny - 1 ? 1.0 : 0.0);
                const double vxx = (v[idx(ip, j)] - 2.0 * v[idx(i, j)] + v[idx(im, j)]) / (hx * hx);
                const double vxy = (v[idx(ip, jp)] - v[idx(ip, jm)] - v[idx(im, jp)] +
                                    v[idx(im, jm)]) /
                                   (4.0 * hx * hy);
                const double vx_up = phi[idx(i, j)] >= 0.0 ? vx_p : vx_m;

                double e = godunov_sq(s * s, vx_m, vx_p);
                e += eps * (s * s * vxx + phi[idx(i, j)] * vx_up);
                e += cross * s * tv[j] * vxy;
                e += quad * tv[j] * tv[j] * vy_c * vy_c;
                step_ham_max = std::max(step_ham_max, std::abs(e));
                rhs[idx(i, j)] = v[idx(i, j)] + dt * e;
            }
        }
        sol.ham_max = std::max(sol.ham_max, step_ham_max);

        // implicit y-sweep per x-line: (I + dt A_y) v' = rhs with
        // A_y = -(fast tau^2 D_yy + c_y D_y), c_y = fast b + corr tau sigma vx (lagged)
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j) {
                double vx_c;
                if (i == 0)
                    vx_c = (v[idx(1, j)] - v[idx(0, j)]) / hx;
                else if (i == nx - 1)
                    vx_c = (v[idx(nx - 1, j)] - v[idx(nx - 2, j)]) / hx;
                else
                    vx_c = (v[idx(i + 1, j)] - v[idx(i - 1, j)]) / (2.0 * hx);
                cw[j] = fast * bv[j] + corr * tv[j] * sig[idx(i, j)] * vx_c;
                dw[j] = fast * tv[j] * tv[j];
            }
            for (int j = 0; j < ny; ++j) {
                const bool lo = j == 0, hi = j == ny - 1;
                double d = 1.0, sb = 0.0, sp = 0.0;
                const double diff = dw[j] / (hy * hy);
                if (lo) {
                    d += dt * 2.0 * diff;
                    sp -= dt * 2.0 * diff;
                } else if (hi) {
                    d += dt * 2.0 * diff;
                    sb -= dt * 2.0 * diff;
                } else {
                    d += dt * 2.0 * diff;
                    sb -= dt * diff;
                    sp -= dt * diff;
                }
                const double c = cw[j];
                const int st = drift_stencil(c, dw[j], hy, lo, hi);
                if (st == 0) {
                    sp -= dt * c / (2.0 * hy);
                    sb += dt * c / (2.0 * hy);
                } else if (st > 0) {
                    d += dt * c / hy;
                    if (hi)
                        sb -= dt * c / hy;
                    else
                        sp -= dt * c / hy;
                } else {
                    d -= dt * c / hy;
                    if (lo)
                        sp += dt * c / hy;
                    else
                        sb += dt * c / hy;
                }
                dia[j] = d;
                sub[j] = sb;
                sup[j] = sp;
                col[j] = rhs[idx(i, j)];
            }
            // Thomas
            double beta = dia[0];
            cw[0] = sup[0] / beta;
            dw[0] = col[0] / beta;
            for (int j = 1; j < ny; ++j) {
                beta = dia[j] - sub[j] * cw[j - 1];
                cw[j] = sup[j] / beta;
                dw[j] = (col[j] - sub[j] * dw[j - 1]) / beta;
            }
            rhs[idx(i, ny - 1)] = dw[ny - 1];
            for (int j = ny - 2; j >= 0; --j)
                rhs[idx(i, j)] = dw[j] - cw[j] * rhs[idx(i, j + 1)];
        }
        sol.v = rhs;

        // instability detection against the recorded growth budget
        const double tk = static_cast<double>(k + 1) * dt;
        const double band_hi = h_hi + tk * (sol.ham_max + 1.0) + 1.0;
        const double band_lo = h_lo - tk * (sol.ham_max + 1.0) - 1.0;
        for (double vv : sol.v)
            if (!(vv > band_lo && vv < band_hi))
                throw NumericalError(
                    "solve_eps_pde: sup-norm growth exceeded the stability budget at step " +
                    std::to_string(k) + "; use a smaller dt");

        while (snap_next < opt.snapshot_times.size() &&
               opt.snapshot_times[snap_next] <= tk + 1e-12) {
            sol.snapshots.push_back(sol.v);
            sol.snapshot_times.push_back(tk);
            ++snap_next;
        }
    }
    return sol;
}

}  // namespace svhom
