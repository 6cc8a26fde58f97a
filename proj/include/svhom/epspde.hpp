#pragma once

#include <span>
#include <vector>

#include "svhom/families.hpp"
#include "svhom/grid.hpp"
#include "svhom/model.hpp"

namespace svhom {

struct EpsPdeSolution {
    double eps = 0.0;
    double alpha = 2.0;
    Grid grid;  // dim 2: axis 0 = x, axis 1 = y
    double T = 0.0;
    double dt = 0.0;
    std::int64_t steps = 0;
    double ham_max = 0.0;  // largest explicit Hamiltonian value seen (growth budget)
    std::vector<double> v0;
    std::vector<double> v;  // terminal field
    std::vector<std::vector<double>> snapshots;
    std::vector<double> snapshot_times;

    double value_at(double x, double y) const {
        const double xy[2] = {x, y};
        return interp_multilinear(grid, v, std::span<const double>(xy, 2));
    }
};

struct EpsPdeOptions {
    double dt = 1e-3;  // capped by the recorded explicit stability bounds
    std::vector<double> snapshot_times;
};

// IMEX marching of the full two-scale parabolic problem at n = m = 1:
// the stiff fast-variable diffusion and drift (factor eps^{1-alpha}, plus the
// correlation drift with lagged v_x) are implicit; the x-terms, the cross
// term and the lagged quadratic y-gradient are explicit. Neumann box.
EpsPdeSolution solve_eps_pde(const ModelSpec& spec, double eps, const Payoff& h, double T,
                             const Grid& grid2d, const EpsPdeOptions& opt = {});

}  // namespace svhom
