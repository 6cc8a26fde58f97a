#include "svhom/fdops.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "svhom/errors.hpp"

namespace svhom {

void CsrMatrix::apply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
        y[i] = s;
    }
}

void CsrMatrix::apply_transpose(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) y[col[k]] += val[k] * x[i];
}

double CsrMatrix::inf_norm() const {
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += std::abs(val[k]);
        m = std::max(m, s);
    }
    return m;
}

double CsrMatrix::max_abs_diag() const {
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            if (col[k] == i) m = std::max(m, std::abs(val[k]));
    return m;
}

bool CsrMatrix::is_m_matrix(double tol) const {
    for (int i = 0; i < n; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            if (col[k] == i) {
                if (val[k] < -tol) return false;
            } else if (val[k] > tol) {
                return false;
            }
        }
    return true;
}

int drift_stencil(double c, double diag_diff, double h, bool at_lo, bool at_hi) {
    if (!at_lo && !at_hi && std::abs(c) * h <= 2.0 * diag_diff * 0.999) return 0;
    return c >= 0.0 ? +1 : -1;
}

namespace {

struct RowBuilder {
    // Dense per-row accumulation over at most 9 neighbors, flushed in index order.
    std::vector<std::pair<int, double>> entries;

    void add(int j, double v) {
        for (auto& e : entries)
            if (e.first == j) {
                e.second += v;
                return;
            }
        entries.emplace_back(j, v);
    }
    void clear() { entries.clear(); }
};

}  // namespace

CsrMatrix assemble_neg_generator(const Grid& g, const NodeVecFn& drift_at,
                                 const NodeVecFn& diff_at) {
    const int dim = g.dim();
    const int n = g.size();
    const double h = g.h();
    const double h2 = h * h;

    CsrMatrix A;
    A.n = n;
    A.tridiagonal = (dim == 1);
    A.row_ptr.assign(n + 1, 0);
    A.row_ptr[0] = 0;

    double cbuf[2];
    double mbuf[4];
    RowBuilder row;

    for (int i = 0; i < n; ++i) {
        row.clear();
        const auto mi = g.multi_index(i);
        drift_at(i, std::span<double>(cbuf, static_cast<std::size_t>(dim)));
        diff_at(i, std::span<double>(mbuf, static_cast<std::size_t>(dim * dim)));

        const bool at_lo0 = mi[0] == 0;
        const bool at_hi0 = mi[0] == g.axis_nodes(0) - 1;
        const bool at_lo1 = dim == 2 && mi[1] == 0;
        const bool at_hi1 = dim == 2 && mi[1] == g.axis_nodes(1) - 1;
        const bool boundary = at_lo0 || at_hi0 || at_lo1 || at_hi1;

        double m12 = 0.0;
        if (dim == 2 && !boundary) {
            m12 = 0.5 * (mbuf[1] + mbuf[2]);
            if (std::abs(m12) > std::min(mbuf[0], mbuf[3]) + 1e-14)
                throw NumericalError(
                    "assemble_neg_generator: tau tau^T not diagonally dominant; "
                    "cross-derivative stencil would lose monotonicity");
        }

        for (int d = 0; d < dim; ++d) {
            const double mdd = (dim == 1) ? mbuf[0] : mbuf[d * 2 + d];
            const double straight = mdd - std::abs(m12);
            const bool lo = (d == 0) ? at_lo0 : at_lo1;
            const bool hi = (d == 0) ? at_hi0 : at_hi1;
            const int stride = (dim == 1) ? 1 : (d == 0 ? g.axis_nodes(1) : 1);
            const int up = i + stride;
            const int dn = i - stride;

            // diffusion: -(M_dd - |m12|) D^2_dd with mirror ghosts
            if (lo) {
                row.add(i, 2.0 * straight / h2);
                row.add(up, -2.0 * straight / h2);
            } else if (hi) {
                row.add(i, 2.0 * straight / h2);
                row.add(dn, -2.0 * straight / h2);
            } else {
                row.add(i, 2.0 * straight / h2);
                row.add(up, -straight / h2);
                row.add(dn, -straight / h2);
            }

            // drift: -c_d D_d
            const double c = cbuf[d];
            const int st = drift_stencil(c, straight, h, lo, hi);
            if (st == 0) {
                row.add(up, -c / (2.0 * h));
                row.add(dn, c / (2.0 * h));
            } else if (st > 0) {
                // forward difference; at the upper edge fold the ghost onto dn
                const int nb = hi ? dn : up;
                row.add(i, c / h);
                row.add(nb, -c / h);
            } else {
                const int nb = lo ? up : dn;
                row.add(i, -c / h);
                row.add(nb, c / h);
            }
        }

        if (dim == 2 && m12 != 0.0) {
            // -(2 m12 D^2_01): corner stencil by the sign of m12
            const int s1 = g.axis_nodes(1);
            const double a = std::abs(m12);
            row.add(i, 2.0 * a / h2);
            if (m12 > 0.0) {
                row.add(i + s1 + 1, -a / h2);
                row.add(i - s1 - 1, -a / h2);
            } else {
                row.add(i + s1 - 1, -a / h2);
                row.add(i - s1 + 1, -a / h2);
            }
        }

        std::sort(row.entries.begin(), row.entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [j, v] : row.entries) {
            A.col.push_back(j);
            A.val.push_back(v);
        }
        A.row_ptr[i + 1] = static_cast<int>(A.col.size());
    }
    return A;
}

namespace {

// Thomas solve for (shift I + A) with A tridiagonal CSR; optionally transposed.
std::vector<double> thomas_solve(const CsrMatrix& A, double shift,
                                 std::span<const double> rhs, bool transpose) {
    const int n = A.n;
    std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const int j = A.col[k];
            if (j == i)
                diag[i] += A.val[k];
            else if (j == i + 1)
                sup[i] += A.val[k];
            else if (j == i - 1)
                sub[i] += A.val[k];
            else
                throw NumericalError("thomas_solve: matrix is not tridiagonal");
        }
    for (int i = 0; i < n; ++i) diag[i] += shift;
    if (transpose) {
        // transpose of tridiagonal: swap sub/sup with an index shift
        std::vector<double> tsub(n, 0.0), tsup(n, 0.0);
        for (int i = 0; i + 1 < n; ++i) {
            tsub[i + 1] = sup[i];
            tsup[i] = sub[i + 1];
        }
        sub = std::move(tsub);
        sup = std::move(tsup);
    }

    std::vector<double> c(n), d(n), x(n);
    double beta = diag[0];
    if (beta == 0.0) throw NumericalError("thomas_solve: zero pivot");
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for (int i = 1; i < n; ++i) {
        beta = diag[i] - sub[i] * c[i - 1];
        if (beta == 0.0) throw NumericalError("thomas_solve: zero pivot");
        c[i] = sup[i] / beta;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    x[n - 1] = d[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

Eigen::SparseMatrix<double> to_eigen(const CsrMatrix& A, double shift, bool transpose) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(A.val.size() + A.n);
    for (int i = 0; i < A.n; ++i)
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const int r = transpose ? A.col[k] : i;
            const int c = transpose ? i : A.col[k];
            trips.emplace_back(r, c, A.val[k]);
        }
    for (int i = 0; i < A.n; ++i) trips.emplace_back(i, i, shift);
    Eigen::SparseMatrix<double> M(A.n, A.n);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

}  // namespace

std::vector<double> solve_shifted(const CsrMatrix& A, double shift,
                                  std::span<const double> rhs) {
    if (A.tridiagonal) return thomas_solve(A, shift, rhs, false);
    Eigen::SparseMatrix<double> M = to_eigen(A, shift, false);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success)
        throw NumericalError("solve_shifted: sparse LU factorization failed");
    Eigen::VectorXd b(A.n);
    for (int i = 0; i < A.n; ++i) b[i] = rhs[i];
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success)
        throw NumericalError("solve_shifted: sparse LU solve failed");
    return std::vector<double>(x.data(), x.data() + A.n);
}

struct ShiftedSolver::Impl {
    bool tridiag = false;
    CsrMatrix A;  // kept for Thomas path
    double shift = 0.0;
    bool transpose = false;
    Eigen::SparseMatrix<double> M;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

ShiftedSolver::ShiftedSolver(const CsrMatrix& A, double shift, bool transpose)
    : impl_(std::make_unique<Impl>()) {
    impl_->tridiag = A.tridiagonal;
    impl_->shift = shift;
    impl_->transpose = transpose;
    if (A.tridiagonal) {
        impl_->A = A;
    } else {
        impl_->M = to_eigen(A, shift, transpose);
        impl_->lu.compute(impl_->M);
        if (impl_->lu.info() != Eigen::Success)
            throw NumericalError("ShiftedSolver: sparse LU factorization failed");
    }
}

ShiftedSolver::~ShiftedSolver() = default;
ShiftedSolver::ShiftedSolver(ShiftedSolver&&) noexcept = default;

std::vector<double> ShiftedSolver::solve(std::span<const double> rhs) const {
    if (impl_->tridiag)
        return thomas_solve(impl_->A, impl_->shift, rhs, impl_->transpose);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rhs.size()));
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rhs[i];
    Eigen::VectorXd x = impl_->lu.solve(b);
    if (impl_->lu.info() != Eigen::Success)
        throw NumericalError("ShiftedSolver: sparse LU solve failed");
    return std::vector<double>(x.data(), x.data() + x.size());
}

void grad_centered(const Grid& g, std::span<const double> w, int node,
                   std::span<double> out) {
    const int dim = g.dim();
    const auto mi = g.multi_index(node);
    for (int d = 0; d < dim; ++d) {
        const int stride = (dim == 1) ? 1 : (d == 0 ? g.axis_nodes(1) : 1);
        const bool lo = mi[d] == 0;
        const bool hi = mi[d] == g.axis_nodes(d) - 1;
        const double wp = hi ? w[node - stride] : w[node + stride];
        const double wm = lo ? w[node + stride] : w[node - stride];
        out[d] = (wp - wm) / (2.0 * g.h());
    }
}

void grad_one_sided(const Grid& g, std::span<const double> w, int node,
                    std::span<double> fwd, std::span<double> bwd) {
    const int dim = g.dim();
    const auto mi = g.multi_index(node);
    for (int d = 0; d < dim; ++d) {
        const int stride = (dim == 1) ? 1 : (d == 0 ? g.axis_nodes(1) : 1);
        const bool lo = mi[d] == 0;
        const bool hi = mi[d] == g.axis_nodes(d) - 1;
        const double wp = hi ? w[node - stride] : w[node + stride];
        const double wm = lo ? w[node + stride] : w[node - stride];
        fwd[d] = (wp - w[node]) / g.h();
        bwd[d] = (w[node] - wm) / g.h();
    }
}

}  // namespace svhom
