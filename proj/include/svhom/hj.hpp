#pragma once

#include <functional>
#include <span>
#include <vector>

#include "svhom/effham.hpp"
#include "svhom/families.hpp"
#include "svhom/grid.hpp"

namespace svhom {

struct HJSolution {
    Grid x_grid;
    double T = 0.0;
    int steps = 0;
    double dt = 0.0;
    double cfl = 0.0;
    double alpha_visc = 0.0;          // global table slope used in the CFL rule
    std::vector<double> v0;           // initial data on the grid
    std::vector<double> v;            // terminal field v(T, .)
    std::vector<std::vector<double>> snapshots;  // optional intermediate fields
    std::vector<double> snapshot_times;

    double value_at(std::span<const double> x) const { return interp_multilinear(x_grid, v, x); }
};

// Explicit local Lax-Friedrichs marching of v_t = H(x, Dv), H >= 0 from the
// table; the numerical Hamiltonian is floored at 0, which keeps v
// non-decreasing in t node-wise. Errors out if solution slopes leave the
// table's p-range.
HJSolution solve_effective_hj(const EffectiveHamiltonianTable& table, const Payoff& h, double T,
                              const Grid& x_grid, double cfl,
                              std::span<const double> snapshot_times = {});

// sup_y { h(y) - |x-y|^2 / (4 c t) } on a fine 1D grid; closed-form solution
// of v_t = c v_x^2 for x-independent quadratic tables.
double hopf_lax_oracle(double c, const Payoff& h, double t, double x, double y_lo, double y_hi,
                       int ny = 20001);

struct RateFunctionResult {
    std::vector<double> x0, x;
    double t = 0.0;
    double I = 0.0;
    bool feasible = true;
    std::vector<double> path_times;
    std::vector<std::vector<double>> path;  // K+1 positions
};

// Dynamic programming over K time slices on the Lagrangian table's x-grid;
// per-step cost (t/K) L(x_k, (x_{k+1}-x_k) K / t); ties break toward the
// smallest step speed, then lexicographic node order.
RateFunctionResult rate_function(const EffectiveLagrangianTable& lag, std::span<const double> x0,
                                 std::span<const double> x, double t, int K_steps);

// One DP sweep returning the terminal cost at every grid node (used by the
// LDP stage to take the infimum over a target set without re-running).
std::vector<double> rate_function_field(const EffectiveLagrangianTable& lag,
                                        std::span<const double> x0, double t, int K_steps);

}  // namespace svhom
