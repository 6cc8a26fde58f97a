#include "svhom/model.hpp"

#include <algorithm>
#include <cmath>

#include "svhom/linalg.hpp"

namespace svhom {

namespace {

// Halton sequence, bases 2/3/5/7: deterministic quasi-random sampling. The
// seed offsets the start index so different seeds see different point sets.
double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

constexpr int kBases[4] = {2, 3, 5, 7};

void halton_point(std::uint64_t index, int dim, double radius, std::span<double> out) {
    for (int d = 0; d < dim; ++d)
        out[d] = (2.0 * halton(index, kBases[d]) - 1.0) * radius;
}

// Unit direction from Halton angles (dim <= 2).
void halton_direction(std::uint64_t index, int dim, std::span<double> out) {
    if (dim == 1) {
        out[0] = (index % 2 == 0) ? 1.0 : -1.0;
        return;
    }
    const double a = 2.0 * M_PI * halton(index, 2);
    out[0] = std::cos(a);
    out[1] = std::sin(a);
}

void scale_to_sphere(std::span<double> y, double radius) {
    const double r = norm2(y);
    if (r == 0.0) {
        y[0] = radius;
        return;
    }
    for (auto& v : y) v *= radius / r;
}

struct Sampler {
    const ModelSpec& spec;
    std::uint64_t offset;
    std::vector<double> x, y, z, xi, buf_n, buf_m, buf_nm, buf_nm2, buf_mm;

    explicit Sampler(const ModelSpec& s, std::uint64_t seed)
        : spec(s),
          offset(1 + (seed % 100003) * 17),
          x(s.n),
          y(s.m),
          z(s.m),
          xi(std::max(s.n, s.m)),
          buf_n(s.n),
          buf_m(s.m),
          buf_nm(static_cast<std::size_t>(s.n) * s.m),
          buf_nm2(static_cast<std::size_t>(s.n) * s.m),
          buf_mm(static_cast<std::size_t>(s.m) * s.m) {}
};

void observe(AssumptionCheck& c, double margin, std::span<const double> y,
             std::span<const double> x) {
    if (margin < c.worst_margin) {
        c.worst_margin = margin;
        c.witness_y.assign(y.begin(), y.end());
        c.witness_x.assign(x.begin(), x.end());
    }
}

}  // namespace

double sigma_t_p_squared(const ModelSpec& spec, std::span<const double> x,
                         std::span<const double> y, std::span<const double> p,
                         std::span<double> sigma_scratch) {
    spec.sigma(x, y, sigma_scratch);
    return sq_norm_at_x(sigma_scratch, spec.n, spec.m, p);
}

ValidationReport validate_model(const ModelSpec& spec, int sample_budget, std::uint64_t rng_seed) {
    spec.basic_checks();
    require(sample_budget >= 1000, "validate_model: sample_budget must be >= 1000");

    ValidationReport rep;
    rep.sample_budget = sample_budget;
    rep.seed = rng_seed;

    Sampler s(spec, rng_seed);
    const double ball_r = 2.0 * std::max(spec.R_ergodic, spec.R1);
    const double x_range = 5.0;

    AssumptionCheck ce{"(E) b(y).y <= -B|y|^2 for |y|>R", true, 1e300, {}, {}, ""};
    AssumptionCheck cu{"(U) b(y)=b_far-y, tau(y)=tau_far for |y|>R1", true, 1e300, {}, {}, ""};
    AssumptionCheck cnd{"unifnondeg |tau^T xi|^2 > theta", true, 1e300, {}, {}, ""};
    AssumptionCheck cs1{"(S1) |sigma^T xi|^2 >= nu", true, 1e300, {}, {}, ""};
    AssumptionCheck cs2{"(S2) modulus bound", true, 1e300, {}, {}, ""};
    const bool check_s1 = spec.alpha > 2.0;
    const bool check_s2 = static_cast<bool>(spec.s2_modulus);

    for (int k = 0; k < sample_budget; ++k) {
        const std::uint64_t idx = s.offset + static_cast<std::uint64_t>(k);
        // Alternate ball and sphere-shell samples so both sides of R, R1 are hit.
        halton_point(idx, spec.m, ball_r, s.y);
        if (k % 3 == 1) scale_to_sphere(s.y, spec.R_ergodic * (1.01 + halton(idx, 5)));
        if (k % 3 == 2) scale_to_sphere(s.y, spec.R1 * (1.01 + halton(idx, 7)));
        halton_point(idx * 2 + 1, spec.n, x_range, s.x);
        halton_direction(idx, spec.m, std::span<double>(s.xi.data(), spec.m));

        const double ynorm = norm2(s.y);

        spec.b(s.y, s.buf_m);
        if (!all_finite(s.buf_m)) {
            observe(ce, -1e300, s.y, s.x);
            ce.note = "non-finite b(y)";
            continue;
        }
        if (ynorm > spec.R_ergodic)
            observe(ce, -spec.B_ergodic * ynorm * ynorm - dot(s.buf_m, s.y), s.y, s.x);

        spec.tau(s.y, s.buf_mm);
        if (!all_finite(s.buf_mm)) {
            observe(cnd, -1e300, s.y, s.x);
            cnd.note = "non-finite tau(y)";
            continue;
        }
        observe(cnd,
                sq_norm_at_x(s.buf_mm, spec.m, spec.m, std::span<const double>(s.xi.data(), spec.m)) -
                    spec.theta,
                s.y, s.x);

        if (ynorm > spec.R1) {
            double dev = 0.0;
            for (int d = 0; d < spec.m; ++d)
                dev = std::max(dev, std::abs(s.buf_m[d] - (spec.b_far[d] - s.y[d])));
            for (int d = 0; d < spec.m * spec.m; ++d)
                dev = std::max(dev, std::abs(s.buf_mm[d] - spec.tau_far[d]));
            observe(cu, 1e-12 - dev, s.y, s.x);
        }

        spec.sigma(s.x, s.y, s.buf_nm);
        if (!all_finite(s.buf_nm)) {
            observe(check_s1 ? cs1 : cnd, -1e300, s.y, s.x);
            (check_s1 ? cs1 : cnd).note = "non-finite sigma(x,y)";
            continue;
        }
        if (check_s1) {
            halton_direction(idx + 11, spec.n, std::span<double>(s.xi.data(), spec.n));
            observe(cs1,
                    sq_norm_at_x(s.buf_nm, spec.n, spec.m,
                                 std::span<const double>(s.xi.data(), spec.n)) -
                        *spec.nu,
                    s.y, s.x);
        }
        if (check_s2) {
            halton_point(idx * 3 + 2, spec.m, ball_r, s.z);
            spec.sigma(s.x, s.z, s.buf_nm2);
            double diff = 0.0;
            for (int d = 0; d < spec.n * spec.m; ++d)
                diff = std::max(diff, std::abs(s.buf_nm[d] - s.buf_nm2[d]));
            std::vector<double> dy(spec.m);
            for (int d = 0; d < spec.m; ++d) dy[d] = s.y[d] - s.z[d];
            observe(cs2, spec.s2_modulus(s.y, s.z) * norm2(dy) - diff, s.y, s.x);
        }
    }

    // unifnondeg is strict; the rest pass at margin >= 0
    ce.pass = ce.worst_margin >= 0.0 || ce.worst_margin == 1e300;
    cu.pass = cu.worst_margin >= 0.0 || cu.worst_margin == 1e300;
    cnd.pass = cnd.worst_margin > 0.0;
    cs1.pass = cs1.worst_margin >= 0.0 || cs1.worst_margin == 1e300;
    cs2.pass = cs2.worst_margin >= 0.0 || cs2.worst_margin == 1e300;
    for (AssumptionCheck* c : {&ce, &cu, &cnd}) {
        if (c->worst_margin == 1e300) c->worst_margin = 0.0;
        rep.checks.push_back(*c);
    }
    if (check_s1) {
        if (cs1.worst_margin == 1e300) cs1.worst_margin = 0.0;
        rep.checks.push_back(cs1);
    }
    if (check_s2) {
        if (cs2.worst_margin == 1e300) cs2.worst_margin = 0.0;
        rep.checks.push_back(cs2);
    }

    rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                           [](const AssumptionCheck& c) { return c.pass; });
    return rep;
}

LiapounovSpec liapounov_coefficient(const ModelSpec& spec) {
    const double tau_sup = spec.bounds.tau_sup;
    if (!(tau_sup > 0.0))
        throw NumericalError("liapounov_coefficient: ||tau||_inf = 0, degenerate fast diffusion");
    LiapounovSpec l;
    l.T_tau = tau_sup * tau_sup;
    l.a = spec.B_ergodic / (4.0 * l.T_tau);
    return l;
}

LiapounovReport check_liapounov(const ModelSpec& spec, const LiapounovSpec& lia,
                                std::span<const double> xbar, std::span<const double> pbar,
                                std::span<const double> radii, int sphere_samples) {
    require(!radii.empty(), "check_liapounov: radii required");
    for (std::size_t i = 1; i < radii.size(); ++i)
        require(radii[i] > radii[i - 1], "check_liapounov: radii must be increasing");
    require(radii.back() > spec.R_ergodic, "check_liapounov: max radius must exceed R");

    LiapounovReport rep;
    rep.radii.assign(radii.begin(), radii.end());
    const double a = lia.a;

    std::vector<double> y(spec.m), bv(spec.m), sig(static_cast<std::size_t>(spec.n) * spec.m),
        tauv(static_cast<std::size_t>(spec.m) * spec.m), stp(spec.m), corr(spec.m),
        q(spec.m), tq(spec.m);

    for (double r : radii) {
        double mn = 1e300;
        for (int k = 0; k < sphere_samples; ++k) {
            halton_direction(static_cast<std::uint64_t>(k) + 1, spec.m, y);
            scale_to_sphere(y, r);
            spec.b(y, bv);
            spec.tau(y, tauv);
            spec.sigma(xbar, y, sig);
            // G[chi] with chi = a|y|^2: Dchi = 2a y, D2chi = 2a I
            mat_t_vec(sig, spec.n, spec.m, pbar, stp);          // sigma^T pbar
            matvec(tauv, spec.m, spec.m, stp, corr);            // tau sigma^T pbar
            for (int d = 0; d < spec.m; ++d) q[d] = 2.0 * a * y[d];
            mat_t_vec(tauv, spec.m, spec.m, q, tq);             // tau^T Dchi
            double drift_term = 0.0;
            for (int d = 0; d < spec.m; ++d) drift_term += (bv[d] + 2.0 * corr[d]) * q[d];
            double tr = 0.0;
            for (int i = 0; i < spec.m; ++i) {
                double s = 0.0;
                for (int j = 0; j < spec.m; ++j) s += tauv[i * spec.m + j] * tauv[i * spec.m + j];
                tr += s;  // tr(tau tau^T) = sum of squared entries
            }
            const double g = -drift_term - dot(tq, tq) - 2.0 * a * tr;
            if (!std::isfinite(g))
                throw NumericalError("check_liapounov: non-finite G[chi] at radius " +
                                     std::to_string(r));
            mn = std::min(mn, g);
        }
        rep.min_g.push_back(mn);
    }

    bool increasing = true;
    for (std::size_t i = 1; i < rep.min_g.size(); ++i)
        if (rep.radii[i - 1] > spec.R_ergodic && rep.min_g[i] <= rep.min_g[i - 1])
            increasing = false;
    rep.pass = increasing && rep.min_g.back() > 0.0;
    if (!rep.pass) rep.note = "G[chi] does not diverge on the sampled radii";
    return rep;
}

void estimate_bounds(ModelSpec& spec, int sample_budget, std::uint64_t seed) {
    if (spec.bounds.declared) return;
    Sampler s(spec, seed);
    const double ball_r = 2.0 * std::max({spec.R_ergodic, spec.R1, 1.0});
    CoefficientBounds b;
    std::vector<double> y2(spec.m), bm2(spec.m), nm2(static_cast<std::size_t>(spec.n) * spec.m),
        mm2(static_cast<std::size_t>(spec.m) * spec.m);
    for (int k = 0; k < sample_budget; ++k) {
        const std::uint64_t idx = s.offset + static_cast<std::uint64_t>(k);
        halton_point(idx, spec.m, ball_r, s.y);
        halton_point(idx * 2 + 1, spec.n, 5.0, s.x);
        halton_point(idx * 5 + 3, spec.m, ball_r, y2);

        spec.sigma(s.x, s.y, s.buf_nm);
        spec.tau(s.y, s.buf_mm);
        spec.b(s.y, s.buf_m);
        spec.phi(s.x, s.y, s.buf_n);
        b.sigma_sup = std::max(b.sigma_sup, spectral_norm_small(s.buf_nm, spec.n, spec.m));
        b.tau_sup = std::max(b.tau_sup, spectral_norm_small(s.buf_mm, spec.m, spec.m));
        b.phi_sup = std::max(b.phi_sup, norm2(s.buf_n));

        spec.sigma(s.x, y2, nm2);
        spec.tau(y2, mm2);
        spec.b(y2, bm2);
        std::vector<double> dy(spec.m);
        for (int d = 0; d < spec.m; ++d) dy[d] = s.y[d] - y2[d];
        const double dn = norm2(dy);
        if (dn > 1e-9) {
            double ds = 0.0, dt = 0.0, db = 0.0;
            for (int d = 0; d < spec.n * spec.m; ++d) ds = std::max(ds, std::abs(s.buf_nm[d] - nm2[d]));
            for (int d = 0; d < spec.m * spec.m; ++d) dt = std::max(dt, std::abs(s.buf_mm[d] - mm2[d]));
            for (int d = 0; d < spec.m; ++d) db = std::max(db, std::abs(s.buf_m[d] - bm2[d]));
            b.sigma_lip = std::max(b.sigma_lip, ds / dn);
            b.tau_lip = std::max(b.tau_lip, dt / dn);
            b.b_lip = std::max(b.b_lip, db / dn);
        }
    }
    // 10% safety inflation on sampled estimates
    b.sigma_sup *= 1.1;
    b.tau_sup *= 1.1;
    b.phi_sup *= 1.1;
    b.sigma_lip *= 1.1;
    b.tau_lip *= 1.1;
    b.b_lip *= 1.1;
    spec.bounds = b;
}

}  // namespace svhom
