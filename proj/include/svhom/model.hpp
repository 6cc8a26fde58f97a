#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "svhom/errors.hpp"

namespace svhom {

// Coefficient providers write into caller-owned buffers; they must be pure
// and safe to call concurrently.
using SlowDriftFn = std::function<void(std::span<const double> x, std::span<const double> y,
                                       std::span<double> out)>;            // phi: R^n
using SlowDiffFn = std::function<void(std::span<const double> x, std::span<const double> y,
                                      std::span<double> out)>;             // sigma: n x m row-major
using FastDriftFn = std::function<void(std::span<const double> y, std::span<double> out)>;  // b: R^m
using FastDiffFn = std::function<void(std::span<const double> y, std::span<double> out)>;   // tau: m x m row-major
using ModulusFn = std::function<double(std::span<const double> y, std::span<const double> z)>;

enum class Regime { critical, supercritical };

inline const char* regime_name(Regime r) {
    return r == Regime::critical ? "critical" : "supercritical";
}

// Sup-norms and Lipschitz constants of the coefficients. Families that know
// them exactly declare them; otherwise they are sampled and inflated by 10%.
struct CoefficientBounds {
    double sigma_sup = 0.0;
    double tau_sup = 0.0;
    double phi_sup = 0.0;
    double sigma_lip = 0.0;
    double tau_lip = 0.0;
    double b_lip = 0.0;
    bool declared = false;
};

struct ModelSpec {
    int n = 1;
    int m = 1;
    double alpha = 2.0;

    SlowDriftFn phi;
    SlowDiffFn sigma;
    FastDriftFn b;
    FastDiffFn tau;

    double B_ergodic = 0.0;   // assumption (E)
    double R_ergodic = 0.0;
    std::vector<double> b_far;    // assumption (U): b(y) = b_far - y beyond R1
    std::vector<double> tau_far;  // m x m row-major
    double R1 = 0.0;
    double theta = 0.0;               // uniform non-degeneracy of tau
    std::optional<double> nu;         // (S1), required when alpha > 2
    ModulusFn s2_modulus;             // (S2) modulus, optional
    bool fast_global_ou = false;      // family-declared: (U) holds for every y

    CoefficientBounds bounds;
    std::string family;

    Regime regime() const { return alpha > 2.0 ? Regime::supercritical : Regime::critical; }
    void basic_checks() const {
        require(n >= 1 && m >= 1, "ModelSpec: dimensions must be >= 1");
        require(alpha >= 2.0, "ModelSpec: alpha must be >= 2");
        require(theta > 0.0, "ModelSpec: theta must be positive");
        require(B_ergodic > 0.0 && R_ergodic > 0.0 && R1 > 0.0,
                "ModelSpec: assumption constants must be positive");
        if (alpha > 2.0) require(nu.has_value() && *nu > 0.0, "ModelSpec: (S1) nu required for alpha > 2");
    }
};

// chi = a |y|^2 with a = B/(4 T), T = ||tau||_inf^2 (midpoint of the admissible range).
struct LiapounovSpec {
    double a = 0.0;
    double T_tau = 0.0;
};

struct AssumptionCheck {
    std::string name;
    bool pass = false;
    double worst_margin = 0.0;          // >= 0 means satisfied at every sample
    std::vector<double> witness_y;      // sample attaining the worst margin
    std::vector<double> witness_x;
    std::string note;
};

struct ValidationReport {
    bool pass = false;
    int sample_budget = 0;
    std::uint64_t seed = 0;
    std::vector<AssumptionCheck> checks;
};

struct LiapounovReport {
    bool pass = false;
    std::vector<double> radii;
    std::vector<double> min_g;  // per-radius minimum of G[chi] over the sphere sample
    std::string note;
};

// Samples assumptions (E), (U), unifnondeg, (S1)/(S2) with quasi-random points;
// provider failures (non-finite output) are reported as failures with witnesses.
ValidationReport validate_model(const ModelSpec& spec, int sample_budget, std::uint64_t rng_seed);

// a = B/(4 ||tau||_inf^2), strictly inside the admissible a < B/(2T) range.
LiapounovSpec liapounov_coefficient(const ModelSpec& spec);

// Evaluates G[chi] on sphere samples at each radius; passes iff the per-radius
// minimum is strictly increasing beyond R_ergodic and positive at the largest radius.
LiapounovReport check_liapounov(const ModelSpec& spec, const LiapounovSpec& lia,
                                std::span<const double> xbar, std::span<const double> pbar,
                                std::span<const double> radii, int sphere_samples = 64);

// Samples sup-norms and Lipschitz constants, inflates by 10%, and records them
// in spec.bounds (declared bounds are left untouched).
void estimate_bounds(ModelSpec& spec, int sample_budget = 2000, std::uint64_t seed = 1);

// Evaluate |sigma(x,y)^T p|^2 through scratch buffers sized n*m.
double sigma_t_p_squared(const ModelSpec& spec, std::span<const double> x,
                         std::span<const double> y, std::span<const double> p,
                         std::span<double> sigma_scratch);

}  // namespace svhom
