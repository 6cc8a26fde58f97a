#include "svhom/measure.hpp"

#include <algorithm>
#include <cmath>

#include "svhom/linalg.hpp"

namespace svhom {

namespace {

double cell_volume(const FastGrid& g) {
    double v = 1.0;
    for (int d = 0; d < g.dim(); ++d) v *= g.h();
    return v;
}

}  // namespace

double InvariantMeasureField::integrate(std::span<const double> f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) s += f[i] * density[i];
    return s * cell_volume(grid);
}

InvariantMeasureField solve_stationary_fp(const ModelSpec& spec, const FastGrid& grid) {
    require(grid.dim() == spec.m, "solve_stationary_fp: grid dimension mismatch");
    require(spec.m <= 2, "solve_stationary_fp: m >= 3 not supported");
    const Grid& g = grid.grid;
    const int n = g.size();
    const int m = spec.m;

    std::vector<double> ybuf(m), tbuf(static_cast<std::size_t>(m) * m);
    const auto drift_at = [&](int node, std::span<double> out) {
        double yc[2];
        g.coords(node, std::span<double>(yc, static_cast<std::size_t>(m)));
        spec.b(std::span<const double>(yc, static_cast<std::size_t>(m)), out);
    };
    const auto diff_at = [&](int node, std::span<double> out) {
        double yc[2];
        g.coords(node, std::span<double>(yc, static_cast<std::size_t>(m)));
        double tv[4];
        spec.tau(std::span<const double>(yc, static_cast<std::size_t>(m)),
                 std::span<double>(tv, static_cast<std::size_t>(m * m)));
        mat_abt(std::span<const double>(tv, static_cast<std::size_t>(m * m)), m, m,
                std::span<const double>(tv, static_cast<std::size_t>(m * m)), m, out);
    };

    const CsrMatrix A = assemble_neg_generator(g, drift_at, diff_at);
    if (!A.is_m_matrix(1e-12 * A.max_abs_diag()))
        throw NumericalError("solve_stationary_fp: generator discretization lost the M-matrix property");

    // Inverse power iteration on the adjoint; a tiny diagonal shift makes the
    // singular system factorable.
    const double scale = A.inf_norm();
    const double shift = 1e-14 * scale;
    ShiftedSolver solver(A, shift, /*transpose=*/true);

    std::vector<double> x(n, 1.0 / n);
    double rel_res = 1e300;
    for (int it = 0; it < 50; ++it) {
        std::vector<double> xn = solver.solve(x);
        double s = 0.0;
        for (double v : xn) s += v;
        if (s == 0.0) throw NumericalError("solve_stationary_fp: null-vector iteration collapsed");
        for (double& v : xn) v /= s;
        x = std::move(xn);
        std::vector<double> r(n);
        A.apply_transpose(x, r);
        rel_res = norm_inf(r) / (scale * norm_inf(x));
        if (rel_res <= 1e-12) break;
    }
    if (rel_res > 1e-12)
        throw NumericalError("solve_stationary_fp: adjoint residual " + std::to_string(rel_res) +
                             " above 1e-12; null space may not be one-dimensional");

    // Strict positivity of the Perron vector certifies a simple null space.
    double mn = 1e300, mx = -1e300;
    for (double v : x) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    if (mx <= 0.0 || mn < -1e-12 * mx)
        throw NumericalError(
            "solve_stationary_fp: stationary vector not positive; grid too coarse or "
            "model violates ergodicity");

    InvariantMeasureField out;
    out.grid = grid;
    out.density.resize(n);
    const double vol = cell_volume(grid);
    double total = 0.0;
    for (double v : x) total += std::max(v, 0.0);
    for (int i = 0; i < n; ++i) out.density[i] = std::max(x[i], 0.0) / (total * vol);
    out.mass = 1.0;
    out.residual = rel_res;
    return out;
}

double GaussianMeasure::density(std::span<const double> y) const {
    const int m = static_cast<int>(mean.size());
    if (m == 1) {
        const double var = cov[0];
        const double d = y[0] - mean[0];
        return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
    }
    const double a = cov[0], b = cov[1], c = cov[3];
    const double det = a * c - b * b;
    const double d0 = y[0] - mean[0], d1 = y[1] - mean[1];
    const double q = (c * d0 * d0 - 2.0 * b * d0 * d1 + a * d1 * d1) / det;
    return std::exp(-0.5 * q) / (2.0 * M_PI * std::sqrt(det));
}

GaussianMeasure ou_analytic_measure(std::span<const double> b_far,
                                    std::span<const double> tau_far, int m) {
    GaussianMeasure g;
    g.mean.assign(b_far.begin(), b_far.end());
    g.cov.assign(static_cast<std::size_t>(m) * m, 0.0);
    // dY = (b - Y) dt + sqrt(2) tau dW: Sigma solves 2 Sigma = 2 tau tau^T.
    mat_abt(tau_far, m, m, tau_far, m, g.cov);
    double det = m == 1 ? g.cov[0] : g.cov[0] * g.cov[3] - g.cov[1] * g.cov[2];
    if (!(det > 0.0))
        throw NumericalError("ou_analytic_measure: degenerate tau_far");
    return g;
}

double effective_h_super(const ModelSpec& spec, std::span<const double> xbar,
                         std::span<const double> pbar, const InvariantMeasureField& mu) {
    const Grid& g = mu.grid.grid;
    std::vector<double> f(g.size());
    std::vector<double> sig(static_cast<std::size_t>(spec.n) * spec.m);
    double yc[2];
    for (int i = 0; i < g.size(); ++i) {
        g.coords(i, std::span<double>(yc, static_cast<std::size_t>(spec.m)));
        f[i] = sigma_t_p_squared(spec, xbar,
                                 std::span<const double>(yc, static_cast<std::size_t>(spec.m)),
                                 pbar, sig);
    }
    return mu.integrate(f);
}

double l1_distance_to_gaussian(const InvariantMeasureField& mu, const GaussianMeasure& g) {
    const Grid& gr = mu.grid.grid;
    double vol = 1.0;
    for (int d = 0; d < gr.dim(); ++d) vol *= gr.h();
    double s = 0.0;
    double yc[2];
    for (int i = 0; i < gr.size(); ++i) {
        gr.coords(i, std::span<double>(yc, static_cast<std::size_t>(gr.dim())));
        s += std::abs(mu.density[i] -
                      g.density(std::span<const double>(yc, static_cast<std::size_t>(gr.dim())))) *
             vol;
    }
    return s;
}

}  // namespace svhom
