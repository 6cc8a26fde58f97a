#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "svhom/errors.hpp"

namespace svhom {

// Uniform tensor grid, dim in {1,2}, shared spacing h on each axis.
// Node order is row-major over (i0, i1): idx = i0 * n1 + i1.
class Grid {
public:
    Grid() = default;

    // Centered box [-k h, k h]^dim with k = round(y_max / h); y_max is snapped
    // to a node multiple so that 0 is always a node.
    static Grid centered(int dim, double y_max, double h) {
        require(dim == 1 || dim == 2, "Grid: dim must be 1 or 2");
        require(h > 0 && y_max > 0, "Grid: positive extent and spacing required");
        const int k = static_cast<int>(std::lround(y_max / h));
        require(k >= 2, "Grid: fewer than 5 nodes per axis");
        Grid g;
        g.dim_ = dim;
        g.h_ = h;
        for (int d = 0; d < dim; ++d) {
            g.lo_[d] = -k * h;
            g.n_[d] = 2 * k + 1;
        }
        return g;
    }

    static Grid box1d(double lo, double hi, double h) {
        require(hi > lo && h > 0, "Grid: malformed box");
        const int n = static_cast<int>(std::lround((hi - lo) / h)) + 1;
        require(n >= 2, "Grid: fewer than 2 nodes");
        Grid g;
        g.dim_ = 1;
        g.h_ = h;
        g.lo_[0] = lo;
        g.n_[0] = n;
        return g;
    }

    static Grid box2d(double lo0, double hi0, double lo1, double hi1, double h) {
        Grid g = box1d(lo0, hi0, h);
        g.dim_ = 2;
        g.lo_[1] = lo1;
        g.n_[1] = static_cast<int>(std::lround((hi1 - lo1) / h)) + 1;
        require(g.n_[1] >= 2, "Grid: fewer than 2 nodes on axis 1");
        return g;
    }

    int dim() const { return dim_; }
    double h() const { return h_; }
    int axis_nodes(int d) const { return n_[d]; }
    double axis_lo(int d) const { return lo_[d]; }
    double axis_hi(int d) const { return lo_[d] + (n_[d] - 1) * h_; }
    double half_width() const { return axis_hi(0); }  // centered grids only

    int size() const {
        int s = 1;
        for (int d = 0; d < dim_; ++d) s *= n_[d];
        return s;
    }

    int index(int i0, int i1 = 0) const { return dim_ == 1 ? i0 : i0 * n_[1] + i1; }

    std::array<int, 2> multi_index(int idx) const {
        if (dim_ == 1) return {idx, 0};
        return {idx / n_[1], idx % n_[1]};
    }

    void coords(int idx, std::span<double> out) const {
        const auto mi = multi_index(idx);
        for (int d = 0; d < dim_; ++d) out[d] = lo_[d] + mi[d] * h_;
    }

    double coord1(int idx) const { return lo_[0] + idx * h_; }

    // Node closest to 0 in every axis (exact on centered grids).
    int center_index() const {
        int idx[2] = {0, 0};
        for (int d = 0; d < dim_; ++d)
            idx[d] = static_cast<int>(std::lround(-lo_[d] / h_));
        return index(idx[0], idx[1]);
    }

    int nearest_index(std::span<const double> x) const {
        int id[2] = {0, 0};
        for (int d = 0; d < dim_; ++d) {
            int i = static_cast<int>(std::lround((x[d] - lo_[d]) / h_));
            id[d] = std::min(std::max(i, 0), n_[d] - 1);
        }
        return index(id[0], id[1]);
    }

    bool contains(std::span<const double> x, double slack = 0.0) const {
        for (int d = 0; d < dim_; ++d)
            if (x[d] < axis_lo(d) - slack || x[d] > axis_hi(d) + slack) return false;
        return true;
    }

    std::vector<double> axis_coords(int d) const {
        std::vector<double> c(n_[d]);
        for (int i = 0; i < n_[d]; ++i) c[i] = lo_[d] + i * h_;
        return c;
    }

private:
    int dim_ = 1;
    double h_ = 1.0;
    std::array<double, 2> lo_{0.0, 0.0};
    std::array<int, 2> n_{1, 1};
};

// Truncated fast-variable grid: centered box with model-facing invariants.
struct FastGrid {
    Grid grid;

    FastGrid() = default;
    FastGrid(int m, double y_max, double h) : grid(Grid::centered(m, y_max, h)) {
        require(h <= y_max / 20.0 + 1e-12, "FastGrid: h_y must be <= Y_max/20");
    }

    int dim() const { return grid.dim(); }
    double h() const { return grid.h(); }
    double y_max() const { return grid.half_width(); }
    int size() const { return grid.size(); }
};

// Multilinear interpolation of nodal values on a Grid (dim 1 or 2).
double interp_multilinear(const Grid& g, std::span<const double> values,
                          std::span<const double> x);

}  // namespace svhom
