#include "svhom/grid.hpp"

#include <algorithm>
#include <cmath>

namespace svhom {

double interp_multilinear(const Grid& g, std::span<const double> values,
                          std::span<const double> x) {
    const int dim = g.dim();
    int i0[2] = {0, 0};
    double t[2] = {0.0, 0.0};
    for (int d = 0; d < dim; ++d) {
        const double s = (x[d] - g.axis_lo(d)) / g.h();
        int i = static_cast<int>(std::floor(s));
        i = std::min(std::max(i, 0), g.axis_nodes(d) - 2);
        i0[d] = i;
        t[d] = std::min(std::max(s - i, 0.0), 1.0);
    }
    if (dim == 1) {
        return values[i0[0]] * (1.0 - t[0]) + values[i0[0] + 1] * t[0];
    }
    const int s1 = g.axis_nodes(1);
    const double v00 = values[i0[0] * s1 + i0[1]];
    const double v01 = values[i0[0] * s1 + i0[1] + 1];
    const double v10 = values[(i0[0] + 1) * s1 + i0[1]];
    const double v11 = values[(i0[0] + 1) * s1 + i0[1] + 1];
    return (1.0 - t[0]) * ((1.0 - t[1]) * v00 + t[1] * v01) +
           t[0] * ((1.0 - t[1]) * v10 + t[1] * v11);
}

}  // namespace svhom
