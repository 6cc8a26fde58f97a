#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "svhom/grid.hpp"

// Monotone finite-difference machinery shared by the cell, measure and
// eigenvalue solvers. Drift terms use a hybrid stencil: centered difference
// where the nodal Peclet condition keeps the M-matrix property, first-order
// upwind otherwise. Diffusion is centered; m=2 cross terms use the
// sign-adapted 7-point corner stencil (requires diagonal dominance of tau
// tau^T) and are dropped on the boundary ring. Boundaries are no-flux
// (mirror ghosts).

namespace svhom {

struct CsrMatrix {
    int n = 0;
    bool tridiagonal = false;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;

    void apply(std::span<const double> x, std::span<double> y) const;
    void apply_transpose(std::span<const double> x, std::span<double> y) const;
    double inf_norm() const;
    double max_abs_diag() const;
    // M-matrix structure: nonnegative diagonal, nonpositive off-diagonals.
    bool is_m_matrix(double tol = 0.0) const;
};

using NodeVecFn = std::function<void(int node, std::span<double> out)>;

// A = -(generator): A w = -(c . Dw + tr(M D^2 w)). drift_at fills c (m entries),
// diff_at fills M = tau tau^T (m x m row-major).
CsrMatrix assemble_neg_generator(const Grid& g, const NodeVecFn& drift_at,
                                 const NodeVecFn& diff_at);

// Decide the drift stencil for one component the same way the assembler does.
// Returns -1 (backward), 0 (centered), +1 (forward).
int drift_stencil(double c, double diag_diff, double h, bool at_lo, bool at_hi);

// Solve (shift I + A) w = rhs. Thomas for tridiagonal A, sparse LU otherwise.
std::vector<double> solve_shifted(const CsrMatrix& A, double shift,
                                  std::span<const double> rhs);

// Reusable factorization of (shift I + A) for repeated solves.
class ShiftedSolver {
public:
    ShiftedSolver(const CsrMatrix& A, double shift, bool transpose);
    ~ShiftedSolver();
    ShiftedSolver(ShiftedSolver&&) noexcept;
    std::vector<double> solve(std::span<const double> rhs) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Centered-difference gradient with mirror ghosts (normal derivative 0 at the
// boundary), written into out (grid.dim() entries).
void grad_centered(const Grid& g, std::span<const double> w, int node,
                   std::span<double> out);

// One-sided differences; at a missing neighbor the mirror ghost makes the
// difference vanish.
void grad_one_sided(const Grid& g, std::span<const double> w, int node,
                    std::span<double> fwd, std::span<double> bwd);

}  // namespace svhom
