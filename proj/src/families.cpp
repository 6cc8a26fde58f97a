#include "svhom/families.hpp"

#include <cmath>
#include <set>

#include "svhom/linalg.hpp"

namespace svhom {

namespace {

class Params {
public:
    Params(const std::map<std::string, double>& p, std::string family)
        : p_(p), family_(std::move(family)) {}

    double get(const std::string& key, double fallback) {
        used_.insert(key);
        auto it = p_.find(key);
        return it == p_.end() ? fallback : it->second;
    }

    void reject_unknown() const {
        for (const auto& [k, v] : p_)
            if (!used_.count(k))
                throw ConfigError("family '" + family_ + "': unknown parameter '" + k + "'");
    }

private:
    const std::map<std::string, double>& p_;
    std::string family_;
    std::set<std::string> used_;
};

void set_global_ou_fast(ModelSpec& s, std::vector<double> b_far, std::vector<double> tau_diag) {
    const int m = s.m;
    s.b_far = b_far;
    s.tau_far.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int d = 0; d < m; ++d) s.tau_far[d * m + d] = tau_diag[d];
    s.fast_global_ou = true;
    s.b = [b_far, m](std::span<const double> y, std::span<double> out) {
        for (int d = 0; d < m; ++d) out[d] = b_far[d] - y[d];
    };
    auto tf = s.tau_far;
    s.tau = [tf, m](std::span<const double>, std::span<double> out) {
        for (int d = 0; d < m * m; ++d) out[d] = tf[d];
    };

    double tmin = 1e300, tmax = 0.0, bmax = 0.0;
    for (int d = 0; d < m; ++d) {
        tmin = std::min(tmin, std::abs(tau_diag[d]));
        tmax = std::max(tmax, std::abs(tau_diag[d]));
        bmax = std::max(bmax, std::abs(b_far[d]));
    }
    require(tmin > 0.0, "family: tau must be non-degenerate");
    s.theta = 0.5 * tmin * tmin;
    s.B_ergodic = 0.5;
    s.R_ergodic = std::max(1.0, 2.01 * bmax * std::sqrt(static_cast<double>(m)));
    s.R1 = 1.0;
    s.bounds.tau_sup = tmax;
    s.bounds.tau_lip = 0.0;
    s.bounds.b_lip = 1.0;
}

}  // namespace

ModelSpec make_family(const std::string& name, const std::map<std::string, double>& params) {
    Params p(params, name);
    ModelSpec s;
    s.family = name;

    if (name == "ou_constant") {
        s.n = 1;
        s.m = 1;
        s.alpha = p.get("alpha", 2.0);
        const double s0 = p.get("s0", 1.0);
        const double phi0 = p.get("phi", 0.0);
        require(s0 != 0.0, "ou_constant: s0 must be nonzero");
        set_global_ou_fast(s, {p.get("b_far", 0.0)}, {p.get("tau", 1.0)});
        s.sigma = [s0](std::span<const double>, std::span<const double>, std::span<double> out) {
            out[0] = s0;
        };
        s.phi = [phi0](std::span<const double>, std::span<const double>, std::span<double> out) {
            out[0] = phi0;
        };
        s.bounds.sigma_sup = std::abs(s0);
        s.bounds.sigma_lip = 0.0;
        s.bounds.phi_sup = std::abs(phi0);
        s.bounds.declared = true;
        s.nu = 0.9 * s0 * s0;
        s.s2_modulus = [](std::span<const double>, std::span<const double>) { return 0.0; };
    } else if (name == "bump") {
        s.n = 1;
        s.m = 1;
        s.alpha = p.get("alpha", 2.0);
        const double s0 = p.get("s0", 1.0);
        const double s1 = p.get("s1", 0.0);
        const double beta = p.get("beta", 1.0);
        const double phi0 = p.get("phi", 0.0);
        require(s0 > 0.0 && s1 >= 0.0, "bump: require s0 > 0 and s1 >= 0");
        require(beta > -0.9, "bump: beta must exceed -0.9");
        set_global_ou_fast(s, {p.get("b_far", 0.0)}, {p.get("tau", 1.0)});
        s.sigma = [s0, s1, beta](std::span<const double> x, std::span<const double> y,
                                 std::span<double> out) {
            const double sx = s0 + s1 / (1.0 + x[0] * x[0]);
            out[0] = sx * std::sqrt(1.0 + beta * std::exp(-y[0] * y[0]));
        };
        s.phi = [phi0](std::span<const double>, std::span<const double>, std::span<double> out) {
            out[0] = phi0;
        };
        const double sx_max = s0 + std::max(0.0, s1);
        s.bounds.sigma_sup = sx_max * std::sqrt(1.0 + std::max(0.0, beta));
        // |d/dy sqrt(1+b e^{-y^2})| <= |b| max(y e^{-y^2}) / sqrt(1+min(b,0))
        s.bounds.sigma_lip =
            sx_max * std::abs(beta) * 0.4289 / std::sqrt(1.0 + std::min(0.0, beta));
        s.bounds.phi_sup = std::abs(phi0);
        s.bounds.declared = true;
        s.nu = 0.9 * s0 * s0 * (1.0 + std::min(0.0, beta));
        // sigma is x-uniformly Lipschitz in y with a Gaussian envelope modulus
        const double s2norm = std::sqrt(1.0 + std::min(0.0, beta));
        s.s2_modulus = [sx_max, beta, s2norm](std::span<const double> y,
                                              std::span<const double> z) {
            const double r = std::min(std::abs(y[0]), std::abs(z[0]));
            return sx_max * std::abs(beta) * (r + 1.0) * std::exp(-r * r / 2.0) / s2norm;
        };
    } else if (name == "ou2d") {
        s.n = 1;
        s.m = 2;
        s.alpha = p.get("alpha", 2.0);
        const double s0 = p.get("s0", 1.0);
        const double s2 = p.get("s2", 0.5);
        const double beta = p.get("beta", 1.0);
        const double phi0 = p.get("phi", 0.0);
        require(s0 > 0.0, "ou2d: require s0 > 0");
        require(beta > -0.9, "ou2d: beta must exceed -0.9");
        set_global_ou_fast(s, {p.get("b1", 0.0), p.get("b2", 0.0)},
                           {p.get("tau1", 1.0), p.get("tau2", 1.0)});
        s.sigma = [s0, s2, beta](std::span<const double>, std::span<const double> y,
                                 std::span<double> out) {
            const double r2 = y[0] * y[0] + y[1] * y[1];
            out[0] = s0 * std::sqrt(1.0 + beta * std::exp(-r2));
            out[1] = s2;
        };
        s.phi = [phi0](std::span<const double>, std::span<const double>, std::span<double> out) {
            out[0] = phi0;
        };
        s.bounds.sigma_sup = std::hypot(s0 * std::sqrt(1.0 + std::max(0.0, beta)), s2);
        s.bounds.sigma_lip = s0 * std::abs(beta) * 0.4289 / std::sqrt(1.0 + std::min(0.0, beta));
        s.bounds.phi_sup = std::abs(phi0);
        s.bounds.declared = true;
        s.nu = 0.9 * (s0 * s0 * (1.0 + std::min(0.0, beta)) + s2 * s2);
        const double s2norm = std::sqrt(1.0 + std::min(0.0, beta));
        s.s2_modulus = [s0, beta, s2norm](std::span<const double> y, std::span<const double> z) {
            const double r = std::min(norm2(std::span<const double>(y.data(), 2)),
                                      norm2(std::span<const double>(z.data(), 2)));
            return 2.0 * s0 * std::abs(beta) * (r + 1.0) * std::exp(-r * r / 2.0) / s2norm;
        };
    } else {
        throw ConfigError("unknown model family '" + name + "'");
    }

    p.reject_unknown();
    s.basic_checks();
    return s;
}

std::vector<std::string> family_names() { return {"ou_constant", "bump", "ou2d"}; }

Payoff make_payoff(const std::string& name, const std::map<std::string, double>& params, int n) {
    Params p(params, "payoff " + name);
    Payoff h;
    h.name = name;
    if (name == "constant") {
        const double c = p.get("c", 1.0);
        h.f = [c](std::span<const double>) { return c; };
        h.bound = std::abs(c);
    } else if (name == "gauss") {
        const double a = p.get("a", 1.0);
        const double k = p.get("k", 1.0);
        const double c = p.get("c", 0.0);
        require(k >= 0.0, "payoff gauss: k must be >= 0");
        h.f = [a, k, c, n](std::span<const double> x) {
            double r2 = 0.0;
            for (int d = 0; d < n; ++d) r2 += (x[d] - c) * (x[d] - c);
            return a * std::exp(-k * r2);
        };
        h.bound = std::abs(a);
    } else if (name == "linear") {
        const double slope = p.get("p", 1.0);
        h.f = [slope, n](std::span<const double> x) {
            double s = 0.0;
            for (int d = 0; d < n; ++d) s += slope * x[d];
            return s;
        };
        h.bound = std::nullopt;
    } else if (name == "neg_quad") {
        const double a = p.get("a", 1.0);
        const double k = p.get("k", 1.0);
        const double c = p.get("c", 0.0);
        h.f = [a, k, c, n](std::span<const double> x) {
            double r2 = 0.0;
            for (int d = 0; d < n; ++d) r2 += (x[d] - c) * (x[d] - c);
            return a - k * r2;
        };
        h.bound = std::nullopt;
    } else {
        throw ConfigError("unknown payoff family '" + name + "'");
    }
    p.reject_unknown();
    return h;
}

}  // namespace svhom
