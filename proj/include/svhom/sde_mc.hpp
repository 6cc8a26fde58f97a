#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "svhom/families.hpp"
#include "svhom/model.hpp"

namespace svhom {

struct MCEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
    double effective_sample_size = 0.0;
    bool degenerate = false;       // effective sample size < 10
    std::int64_t clamped = 0;      // payoff clamps applied (unbounded payoffs)
    bool zero_hits = false;        // tail estimates only: value is an upper bound
};

struct McOptions {
    double dt = 0.01;   // capped at 0.1 eps^{alpha-1} to resolve the fast scale
    std::int64_t n_paths = 100000;
    std::uint64_t seed = 12345;
    int threads = 1;
};

struct TerminalSamples {
    int n = 1, m = 1;
    std::vector<double> X;  // n_paths x n, row-major
    std::vector<double> Y;  // n_paths x m
    double dt_used = 0.0;
    std::int64_t steps = 0;
};

// Euler-Maruyama on the rescaled two-scale system; the slow and fast equations
// share the same m Brownian increments per step. When (U) holds globally the
// fast substep uses the exact OU transition, jointly Gaussian with the shared
// increments.
TerminalSamples simulate_paths(const ModelSpec& spec, double eps, double t,
                               std::span<const double> x0, std::span<const double> y0,
                               const McOptions& opt);

// eps log E[exp(h(X_t)/eps)] by shift-invariant log-sum-exp; delta-method
// standard error; ESS = (sum w)^2 / sum w^2. Unbounded payoffs are clamped at
// |h| <= 50 eps and the clamps are counted.
MCEstimate estimate_v_eps(const ModelSpec& spec, double eps, double t,
                          std::span<const double> x0, std::span<const double> y0,
                          const Payoff& h, const McOptions& opt);

// Half-space or axis box target set in R^n.
struct TargetSet {
    enum class Kind { half_space, box } kind = Kind::half_space;
    std::vector<double> normal;  // half-space: {x : normal.x >= level}
    double level = 0.0;
    std::vector<double> lo, hi;  // box

    bool contains(std::span<const double> x) const;
    bool valid(int n) const;
};

struct TailEstimate {
    MCEstimate prob;      // value = hit fraction, binomial std error
    double eps_log = 0.0; // eps * log(value), upper bound when zero hits
    double eps_log_se = 0.0;
};

TailEstimate estimate_tail_prob(const ModelSpec& spec, double eps, double t,
                                std::span<const double> x0, std::span<const double> y0,
                                const TargetSet& B, const McOptions& opt);

}  // namespace svhom
