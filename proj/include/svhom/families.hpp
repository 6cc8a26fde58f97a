#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svhom/model.hpp"

namespace svhom {

// Named parametric model families exposed by the CLI. All fast processes are
// globally Ornstein-Uhlenbeck (b(y) = b_far - y, constant tau), so (U) holds
// everywhere and assumption constants can be declared exactly.
//
//   ou_constant: n=m=1, sigma = s0 (constant), phi constant.
//   bump:        n=m=1, sigma(x,y) = (s0 + s1/(1+x^2)) * sqrt(1 + beta e^{-y^2}).
//   ou2d:        n=1, m=2, sigma(y) = [s0 sqrt(1 + beta e^{-|y|^2}), s2],
//                tau = diag(tau1, tau2), b_far = (b1, b2).
//
// Unknown family or parameter names are configuration errors.
ModelSpec make_family(const std::string& name, const std::map<std::string, double>& params);

std::vector<std::string> family_names();

// Named payoff families for the MC / HJ / eps-PDE stages. Payoffs without a
// declared bound are clamped to |h| <= 50 eps inside the MC estimator.
struct Payoff {
    std::function<double(std::span<const double> x)> f;
    std::optional<double> bound;
    std::string name;

    double operator()(std::span<const double> x) const { return f(x); }
};

//   constant: h = c
//   gauss:    h = a exp(-k |x - c|^2)
//   linear:   h = p . x                  (unbounded; oracle device)
//   neg_quad: h = a - k |x - c|^2        (unbounded below; steep-well data)
Payoff make_payoff(const std::string& name, const std::map<std::string, double>& params, int n);

}  // namespace svhom
