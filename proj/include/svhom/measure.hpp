#pragma once

#include <span>
#include <vector>

#include "svhom/fdops.hpp"
#include "svhom/grid.hpp"
#include "svhom/model.hpp"

namespace svhom {

struct InvariantMeasureField {
    FastGrid grid;
    std::vector<double> density;  // nonnegative, sums to 1/h^m
    double mass = 0.0;            // discrete integral, 1 after normalization
    double residual = 0.0;        // ||A^T m||_inf / (||A||_inf ||m||_inf)

    double integrate(std::span<const double> f) const;
};

// Stationary density of dY = b(Y) dt + sqrt(2) tau(Y) dW on the truncated grid:
// null vector of the adjoint of the monotone generator discretization, found by
// inverse power iteration and normalized to unit mass.
InvariantMeasureField solve_stationary_fp(const ModelSpec& spec, const FastGrid& grid);

struct GaussianMeasure {
    std::vector<double> mean;  // = b_far
    std::vector<double> cov;   // = tau_far tau_far^T, m x m row-major

    double density(std::span<const double> y) const;
};

// Closed-form stationary law of the OU far-field process (Lyapunov equation
// with unit mean reversion and sqrt(2) tau noise).
GaussianMeasure ou_analytic_measure(std::span<const double> b_far,
                                    std::span<const double> tau_far, int m);

// Supercritical effective Hamiltonian: integral of |sigma(x,y)^T p|^2 d mu(y).
double effective_h_super(const ModelSpec& spec, std::span<const double> xbar,
                         std::span<const double> pbar, const InvariantMeasureField& mu);

// Discrete L1 distance between the computed density and an analytic Gaussian.
double l1_distance_to_gaussian(const InvariantMeasureField& mu, const GaussianMeasure& g);

}  // namespace svhom
