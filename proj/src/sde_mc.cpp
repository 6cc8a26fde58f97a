#include "svhom/sde_mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "svhom/linalg.hpp"
#include "svhom/parallel.hpp"
#include "svhom/rng.hpp"

namespace svhom {

namespace {

struct StepPlan {
    double dt = 0.0;
    std::int64_t steps = 0;
    // slow scalings
    double drift_x = 0.0;   // eps * dt
    double diff_x = 0.0;    // sqrt(2 eps dt)
    // fast Euler scalings
    double drift_y = 0.0;   // eps^{1-alpha} dt
    double diff_y = 0.0;    // sqrt(2 eps^{1-alpha} dt)
    // exact OU substep (global (U) only)
    bool exact_ou = false;
    double ou_decay = 0.0;  // e^{-kappa dt}
    double ou_a = 0.0;      // loading of the shared increments
    double ou_b = 0.0;      // loading of the independent residual
};

StepPlan make_plan(const ModelSpec& spec, double eps, double t, double dt_config) {
    StepPlan p;
    // The fast-scale cap resolves sigma(Y_t) variation seen by X; the exact OU
    // substep keeps Y itself exact at any dt.
    const double dt_fast = 0.1 * std::pow(eps, spec.alpha - 1.0);
    const double dt = std::min(dt_config, dt_fast);
    p.steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t / dt)));
    p.dt = t / static_cast<double>(p.steps);
    const double kappa = std::pow(eps, 1.0 - spec.alpha);
    p.drift_x = eps * p.dt;
    p.diff_x = std::sqrt(2.0 * eps * p.dt);
    p.drift_y = kappa * p.dt;
    p.diff_y = std::sqrt(2.0 * kappa * p.dt);
    p.exact_ou = spec.fast_global_ou;
    if (p.exact_ou) {
        const double u = kappa * p.dt;
        p.ou_decay = std::exp(-u);
        // Y' = b + e^{-u}(Y-b) + tau (a dW + b G): matches the exact transition
        // covariance and its correlation with the shared increments dW.
        const double one_me = -std::expm1(-u);          // 1 - e^{-u}
        const double one_me2 = -std::expm1(-2.0 * u);   // 1 - e^{-2u}
        p.ou_a = std::sqrt(2.0 / kappa) * one_me / p.dt;
        const double b2 = one_me2 - 2.0 * one_me * one_me / u;
        p.ou_b = std::sqrt(std::max(0.0, b2));
    }
    return p;
}

// Advance one path to time t; writes terminal state into (x, y).
void run_path(const ModelSpec& spec, const StepPlan& plan, std::span<const double> x0,
              std::span<const double> y0, std::uint64_t seed, std::int64_t path,
              std::span<double> x, std::span<double> y) {
    const int n = spec.n, m = spec.m;
    PathRng rng(seed, static_cast<std::uint64_t>(path));
    double dw[8], gres[8], phi_v[8], b_v[8], sig_v[64], tau_v[64], noise[8];
    std::copy(x0.begin(), x0.end(), x.begin());
    std::copy(y0.begin(), y0.end(), y.begin());

    const int draws = plan.exact_ou ? 2 * m : m;
    for (std::int64_t k = 0; k < plan.steps; ++k) {
        rng.normals(static_cast<std::uint64_t>(k), 0, dw, draws);
        if (plan.exact_ou)
            for (int d = 0; d < m; ++d) gres[d] = dw[m + d];

        spec.phi(x, y, std::span<double>(phi_v, static_cast<std::size_t>(n)));
        spec.sigma(x, y, std::span<double>(sig_v, static_cast<std::size_t>(n) * m));

        // slow update first (uses the pre-step fast state)
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += sig_v[i * m + j] * dw[j];
            x[i] += plan.drift_x * phi_v[i] + plan.diff_x * s;
        }

        if (plan.exact_ou) {
            // noise = tau (a sqrt(dt) dW + b G); dW here are unit normals
            for (int j = 0; j < m; ++j)
                noise[j] = plan.ou_a * std::sqrt(plan.dt) * dw[j] + plan.ou_b * gres[j];
            double tn[8];
            matvec(std::span<const double>(spec.tau_far.data(), static_cast<std::size_t>(m) * m),
                   m, m, std::span<const double>(noise, static_cast<std::size_t>(m)),
                   std::span<double>(tn, static_cast<std::size_t>(m)));
            for (int j = 0; j < m; ++j)
                y[j] = spec.b_far[j] + plan.ou_decay * (y[j] - spec.b_far[j]) + tn[j];
        } else {
            spec.b(y, std::span<double>(b_v, static_cast<std::size_t>(m)));
            spec.tau(y, std::span<double>(tau_v, static_cast<std::size_t>(m) * m));
            double tn[8];
            matvec(std::span<const double>(tau_v, static_cast<std::size_t>(m) * m), m, m,
                   std::span<const double>(dw, static_cast<std::size_t>(m)),
                   std::span<double>(tn, static_cast<std::size_t>(m)));
            for (int j = 0; j < m; ++j) y[j] += plan.drift_y * b_v[j] + plan.diff_y * tn[j];
        }

        for (int i = 0; i < n; ++i)
            if (!std::isfinite(x[i]))
                throw NumericalError("simulate_paths: non-finite X on path " +
                                     std::to_string(path) + " at step " + std::to_string(k));
        for (int j = 0; j < m; ++j)
            if (!std::isfinite(y[j]))
                throw NumericalError("simulate_paths: non-finite Y on path " +
                                     std::to_string(path) + " at step " + std::to_string(k));
    }
}

}  // namespace

TerminalSamples simulate_paths(const ModelSpec& spec, double eps, double t,
                               std::span<const double> x0, std::span<const double> y0,
                               const McOptions& opt) {
    require(eps > 0.0 && eps <= 1.0, "simulate_paths: eps must lie in (0, 1]");
    require(t > 0.0 && opt.dt > 0.0 && opt.n_paths >= 1, "simulate_paths: bad parameters");
    require(spec.n <= 8 && spec.m <= 8, "simulate_paths: dimensions above 8 unsupported");

    const StepPlan plan = make_plan(spec, eps, t, opt.dt);
    TerminalSamples out;
    out.n = spec.n;
    out.m = spec.m;
    out.dt_used = plan.dt;
    out.steps = plan.steps;
    out.X.resize(static_cast<std::size_t>(opt.n_paths) * spec.n);
    out.Y.resize(static_cast<std::size_t>(opt.n_paths) * spec.m);

    parallel_for(static_cast<int>(opt.n_paths), opt.threads, [&](int p) {
        run_path(spec, plan, x0, y0, opt.seed, p,
                 std::span<double>(out.X.data() + static_cast<std::size_t>(p) * spec.n,
                                   static_cast<std::size_t>(spec.n)),
                 std::span<double>(out.Y.data() + static_cast<std::size_t>(p) * spec.m,
                                   static_cast<std::size_t>(spec.m)));
    });
    return out;
}

MCEstimate estimate_v_eps(const ModelSpec& spec, double eps, double t,
                          std::span<const double> x0, std::span<const double> y0,
                          const Payoff& h, const McOptions& opt) {
    const TerminalSamples ts = simulate_paths(spec, eps, t, x0, y0, opt);
    const std::int64_t N = opt.n_paths;
    const double clamp = 50.0 * eps;

    std::vector<double> hv(N);
    std::atomic<std::int64_t> clamped{0};
    parallel_for(static_cast<int>(N), opt.threads, [&](int p) {
        double v = h(std::span<const double>(ts.X.data() + static_cast<std::size_t>(p) * spec.n,
                                             static_cast<std::size_t>(spec.n)));
        if (!h.bound.has_value()) {
            if (v > clamp) {
                v = clamp;
                clamped.fetch_add(1, std::memory_order_relaxed);
            } else if (v < -clamp) {
                v = -clamp;
                clamped.fetch_add(1, std::memory_order_relaxed);
            }
        }
        hv[p] = v;
    });

    // single-threaded reduction in path order: thread-count independent
    double M = -1e300;
    for (double v : hv) M = std::max(M, v);
    double sw = 0.0, sw2 = 0.0;
    for (double v : hv) {
        const double w = std::exp((v - M) / eps);
        sw += w;
        sw2 += w * w;
    }
    const double mean_w = sw / static_cast<double>(N);

    MCEstimate est;
    est.n_paths = N;
    est.seed = opt.seed;
    est.clamped = clamped.load();
    est.value = M + eps * std::log(mean_w);
    // delta method on the exponential mean: sd(w) / (mean_w sqrt(N)) scaled by eps
    const double var_w =
        std::max(0.0, sw2 / static_cast<double>(N) - mean_w * mean_w) * N / std::max<double>(N - 1, 1);
    est.std_error = eps * std::sqrt(var_w / static_cast<double>(N)) / mean_w;
    est.effective_sample_size = sw * sw / std::max(sw2, 1e-300);
    est.degenerate = est.effective_sample_size < 10.0;
    return est;
}

bool TargetSet::contains(std::span<const double> x) const {
    if (kind == Kind::half_space) return dot(normal, x) >= level;
    for (std::size_t d = 0; d < lo.size(); ++d)
        if (x[d] < lo[d] || x[d] > hi[d]) return false;
    return true;
}

bool TargetSet::valid(int n) const {
    if (kind == Kind::half_space)
        return static_cast<int>(normal.size()) == n && norm2(normal) > 0.0;
    if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n) return false;
    for (int d = 0; d < n; ++d)
        if (!(lo[d] < hi[d])) return false;  // nonempty interior
    return true;
}

TailEstimate estimate_tail_prob(const ModelSpec& spec, double eps, double t,
                                std::span<const double> x0, std::span<const double> y0,
                                const TargetSet& B, const McOptions& opt) {
    require(B.valid(spec.n), "estimate_tail_prob: target set has empty interior or wrong dimension");
    const TerminalSamples ts = simulate_paths(spec, eps, t, x0, y0, opt);
    const std::int64_t N = opt.n_paths;

    std::int64_t hits = 0;
    for (std::int64_t p = 0; p < N; ++p)
        if (B.contains(std::span<const double>(ts.X.data() + static_cast<std::size_t>(p) * spec.n,
                                               static_cast<std::size_t>(spec.n))))
            ++hits;

    TailEstimate te;
    te.prob.n_paths = N;
    te.prob.seed = opt.seed;
    const double Nf = static_cast<double>(N);
    if (hits == 0) {
        // rule-of-three upper confidence bound, flagged
        te.prob.value = 0.0;
        te.prob.std_error = 0.0;
        te.prob.zero_hits = true;
        te.eps_log = eps * std::log(3.0 / Nf);
        te.eps_log_se = 0.0;
        return te;
    }
    const double phat = static_cast<double>(hits) / Nf;
    te.prob.value = phat;
    te.prob.std_error = std::sqrt(phat * (1.0 - phat) / Nf);
    te.prob.effective_sample_size = static_cast<double>(hits);
    te.prob.degenerate = hits < 10;
    te.eps_log = eps * std::log(phat);
    te.eps_log_se = eps * te.prob.std_error / phat;
    return te;
}

}  // namespace svhom
