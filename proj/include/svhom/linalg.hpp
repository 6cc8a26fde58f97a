#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

// Small dense helpers for the low-dimensional (n,m <= 2 in the solvers,
// arbitrary small in the SDE layer) vectors and row-major matrices that
// coefficient providers write into caller-owned buffers.

namespace svhom {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

// y = A x with A row-major (rows x cols).
inline void matvec(std::span<const double> A, std::size_t rows, std::size_t cols,
                   std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += A[i * cols + j] * x[j];
        y[i] = s;
    }
}

// y = A^T x with A row-major (rows x cols); y has length cols.
inline void mat_t_vec(std::span<const double> A, std::size_t rows, std::size_t cols,
                      std::span<const double> x, std::span<double> y) {
    for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) y[j] += A[i * cols + j] * x[i];
}

// C = A B^T for row-major A (r x k), B (c x k): C is r x c row-major.
inline void mat_abt(std::span<const double> A, std::size_t r, std::size_t k,
                    std::span<const double> B, std::size_t c, std::span<double> C) {
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += A[i * k + l] * B[j * k + l];
            C[i * c + j] = s;
        }
}

// |A^T x|^2 for row-major A (rows x cols), x of length rows.
inline double sq_norm_at_x(std::span<const double> A, std::size_t rows, std::size_t cols,
                           std::span<const double> x) {
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += A[i * cols + j] * x[i];
        total += s * s;
    }
    return total;
}

// Spectral norm of a row-major matrix with rows, cols <= 2 (closed form via A A^T).
inline double spectral_norm_small(std::span<const double> A, std::size_t rows, std::size_t cols) {
    double g[4] = {0, 0, 0, 0};  // A A^T, 2x2 max
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < rows; ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < cols; ++l) s += A[i * cols + l] * A[j * cols + l];
            g[i * rows + j] = s;
        }
    if (rows == 1) return std::sqrt(g[0]);
    const double tr = g[0] + g[3];
    const double det = g[0] * g[3] - g[1] * g[2];
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return std::sqrt(std::max(0.0, tr / 2.0 + disc));
}

inline double min_eig_sym2(double a11, double a12, double a22) {
    const double tr = a11 + a22;
    const double det = a11 * a22 - a12 * a12;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return tr / 2.0 - disc;
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace svhom
