#pragma once

#include <span>
#include <vector>

#include "svhom/grid.hpp"
#include "svhom/model.hpp"

namespace svhom {

// Discrete solution of one approximate delta-ergodic problem.
struct CellSolution {
    Regime regime = Regime::critical;
    std::vector<double> xbar, pbar;
    double delta = 0.0;
    FastGrid grid;
    std::vector<double> w;
    double residual_inf = 0.0;
    double lambda_est = 0.0;  // delta * w(0)
    int iterations = 0;
    std::vector<double> residual_history;  // Howard sweeps (critical regime)
};

// Corrector and effective-Hamiltonian value extracted by vanishing discount.
struct CorrectorField {
    Regime regime = Regime::critical;
    std::vector<double> xbar, pbar;
    FastGrid grid;
    std::vector<double> w;  // normalized w(0) = 0
    double lambda = 0.0;
    double cauchy_max = 0.0;   // max consecutive |delta_i w_i(0) - delta_{i+1} w_{i+1}(0)|
    double cauchy_last = 0.0;  // last increment: extrapolation uncertainty proxy
};

// Linear solve of the supercritical problem
//   delta w - b.Dw - tr(tau tau^T D^2 w) = |sigma(x,y)^T p|^2,  Neumann box.
CellSolution solve_cell_super(const ModelSpec& spec, std::span<const double> xbar,
                              std::span<const double> pbar, double delta, const FastGrid& grid);

// Howard policy iteration for the critical problem
//   delta w - tr(tau tau^T D^2 w) - |tau^T Dw|^2 - (b + 2 tau sigma^T p).Dw = |sigma^T p|^2
// via |tau^T q|^2 = sup_a { 2 (tau a).q - |a|^2 } with drift-sign upwinding.
CellSolution solve_cell_critical(const ModelSpec& spec, std::span<const double> xbar,
                                 std::span<const double> pbar, double delta,
                                 const FastGrid& grid, double tol = 1e-10, int max_iter = 200);

// Solves the cell problem along a decreasing delta sequence, extrapolates
// lambda = lim delta w_delta(0) linearly in delta from the last three points,
// and returns the corrector w_{delta_min} - w_{delta_min}(0).
CorrectorField vanishing_discount(const ModelSpec& spec, std::span<const double> xbar,
                                  std::span<const double> pbar, Regime regime,
                                  std::span<const double> deltas, const FastGrid& grid);

struct LipschitzReport {
    std::vector<double> deltas;
    std::vector<double> max_gradient;  // per delta, centered-difference sup norm
    double ratio = 1.0;                // max / min across deltas
    bool pass = false;
};

// Delta-uniform gradient table over >=3 solutions sharing (xbar, pbar, grid),
// deltas spanning at least two decades; passes iff ratio <= 1.1.
LipschitzReport lipschitz_report(std::span<const CellSolution> solutions);

struct GrowthReport {
    double cbar = 0.0;       // smallest C with |w(y)-w(0)| <= C (1 + log sqrt(|y|^2+1))
    double cbar_half = 0.0;  // same fit restricted to the half-domain
    bool pass = false;       // stable within 20%
};

GrowthReport growth_check(const FastGrid& grid, std::span<const double> w, double R_ergodic);

// Principal eigenvalue of u -> tr(tau tau^T D^2 u) + (b + 2 tau sigma^T p).Du
// + |sigma^T p|^2 u by inverse power iteration (the log-transform image of the
// critical cell problem; 1D only).
double hopf_cole_crosscheck(const ModelSpec& spec, std::span<const double> xbar,
                            std::span<const double> pbar, const FastGrid& grid);

struct ConvexFlipResult {
    double convex_residual = 0.0;  // sup-norm residual of -w in the convex form
    double primal_residual = 0.0;  // same stencil, concave form
    bool pass = false;             // convex <= 2 x primal (+ rounding floor)
};

ConvexFlipResult convex_flip_residual(const CorrectorField& corr, const ModelSpec& spec);

// Forcing f(y) = |sigma(xbar, y)^T pbar|^2 sampled on the grid.
std::vector<double> forcing_on_grid(const ModelSpec& spec, std::span<const double> xbar,
                                    std::span<const double> pbar, const FastGrid& grid);

}  // namespace svhom
