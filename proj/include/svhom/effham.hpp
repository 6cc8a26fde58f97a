#pragma once

#include <span>
#include <vector>

#include "svhom/cell.hpp"
#include "svhom/grid.hpp"
#include "svhom/measure.hpp"
#include "svhom/model.hpp"

namespace svhom {

// H(x, p) tabulated on tensor grids (n <= 2) with multilinear interpolation.
struct EffectiveHamiltonianTable {
    Regime regime = Regime::critical;
    int n = 1;
    Grid x_grid;
    Grid p_grid;
    std::vector<double> values;      // x-major: values[ix * p_size + ip]
    std::vector<double> diagnostic;  // per-node convergence diagnostic

    int p_size() const { return p_grid.size(); }
    double at(int ix, int ip) const { return values[static_cast<std::size_t>(ix) * p_size() + ip]; }
    double diag_at(int ix, int ip) const {
        return diagnostic[static_cast<std::size_t>(ix) * p_size() + ip];
    }
    // Multilinear in p at a fixed x node.
    double interp_p(int ix, std::span<const double> p) const;
    // max |dH/dp_d| over the row's grid slopes (directional, one-sided)
    double max_slope(int ix, int d) const;
};

struct EffectiveLagrangianTable {
    int n = 1;
    Grid x_grid;
    Grid q_grid;
    std::vector<double> values;  // x-major; +inf sentinel = kInfCost
    static constexpr double kInfCost = 1e12;

    double at(int ix, int iq) const { return values[static_cast<std::size_t>(ix) * q_grid.size() + iq]; }
    bool feasible(int ix, int iq) const { return at(ix, iq) < kInfCost; }
    // Multilinear in q at a fixed x node; +inf sentinel wins any blend.
    double interp_q(int ix, std::span<const double> q) const;
};

struct TabulateOptions {
    std::vector<double> deltas = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
    int threads = 1;
};

// Fills H via vanishing discount (critical) or the invariant-measure integral
// (supercritical); verifies eq-bounds, H(x,0)=0 and discrete p-convexity
// before returning.
EffectiveHamiltonianTable tabulate_H(const ModelSpec& spec, Regime regime, const Grid& x_grid,
                                     const Grid& p_grid, const FastGrid& cell_grid,
                                     const TabulateOptions& opt = {});

struct PropertyReport {
    bool bounds_pass = false;      // (c): inf_y |s^T p|^2 <= H <= sup_y |s^T p|^2
    bool convexity_pass = false;   // (b): second differences >= -1e-8
    bool semihomo_pass = false;    // (d) at mu in {0.25, 0.5, 0.75}
    bool zero_row_pass = false;    // H(x, 0) = 0
    double continuity_modulus = 0.0;  // (a): max |dH| / (|dx|+|dp|) over neighbors
    double worst_convexity = 0.0;
    double worst_bounds_margin = 0.0;
    double worst_semihomo_margin = 0.0;
    int semihomo_pairs = 0;
    bool pass() const { return bounds_pass && convexity_pass && semihomo_pass && zero_row_pass; }
};

PropertyReport property_suite(const EffectiveHamiltonianTable& table, const ModelSpec& spec,
                              std::span<const double> y_sample_axis);

// Discrete Legendre transform of one x-row: L(x,q) = max_p (p.q - H(x,p));
// q outside the attainable slope range gets the +inf sentinel.
void legendre_transform(const EffectiveHamiltonianTable& table, int x_index, const Grid& q_grid,
                        EffectiveLagrangianTable& out);

EffectiveLagrangianTable legendre_transform_all(const EffectiveHamiltonianTable& table,
                                                const Grid& q_grid);

// Table with the same p-grid and rows blended piecewise-linearly in x onto a
// new x-grid (multilinear blends preserve discrete convexity in p). The DP
// rate-function stages run on finer x-grids than the tabulation grid so that
// the velocity quantum h_x K / t resolves the relevant slopes.
EffectiveHamiltonianTable resample_x(const EffectiveHamiltonianTable& table, const Grid& new_x);

}  // namespace svhom
