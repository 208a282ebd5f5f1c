#pragma once

// Compressed-sparse-row symmetric matrices and the iterative kernels built on
// them: matrix-vector products, conjugate gradients, and power-iteration
// estimates for the extremal generalized eigenvalues of SPD pencils.
//
// Everything here is deterministic: accumulation orders are fixed (row-major,
// ascending column), start vectors come from a fixed-seed generator, and no
// operation depends on wall-clock state. Two runs of the same binary produce
// bit-identical results.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracstep {

using Vector = std::vector<double>;

struct SparseMatrix {
    int dim = 0;
    std::vector<int> row_ptr;    // size dim+1
    std::vector<int> col_idx;    // strictly increasing within each row
    std::vector<double> values;

    int nnz() const { return static_cast<int>(col_idx.size()); }

    double diagonal_entry(int i) const {
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            if (col_idx[k] == i) return values[k];
        return 0.0;
    }
};

/// Row-map accumulator used by the assembly routines; compresses to CSR.
class SparseBuilder {
public:
    explicit SparseBuilder(int dim) : dim_(dim), rows_(dim) {}

    void add(int i, int j, double v) { rows_[i][j] += v; }

    SparseMatrix build() const {
        SparseMatrix a;
        a.dim = dim_;
        a.row_ptr.assign(dim_ + 1, 0);
        for (int i = 0; i < dim_; ++i)
            a.row_ptr[i + 1] = a.row_ptr[i] + static_cast<int>(rows_[i].size());
        a.col_idx.reserve(a.row_ptr[dim_]);
        a.values.reserve(a.row_ptr[dim_]);
        for (int i = 0; i < dim_; ++i) {
            for (const auto& [j, v] : rows_[i]) {
                a.col_idx.push_back(j);
                a.values.push_back(v);
            }
        }
        return a;
    }

private:
    int dim_;
    std::vector<std::map<int, double>> rows_;
};

inline SparseMatrix identity_matrix(int dim) {
    SparseMatrix a;
    a.dim = dim;
    a.row_ptr.resize(dim + 1);
    a.col_idx.resize(dim);
    a.values.assign(dim, 1.0);
    for (int i = 0; i <= dim; ++i) a.row_ptr[i] = i;
    for (int i = 0; i < dim; ++i) a.col_idx[i] = i;
    return a;
}

// ---------------------------------------------------------------------------
// Dense vector helpers (fixed left-to-right accumulation).

inline double dot(const Vector& x, const Vector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

/// y <- a*x + y
inline void axpy(double a, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline Vector scaled(const Vector& x, double a) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i];
    return y;
}

// ---------------------------------------------------------------------------

inline Vector spmv(const SparseMatrix& a, const Vector& x) {
    if (static_cast<int>(x.size()) != a.dim)
        throw std::invalid_argument("spmv: dimension mismatch");
    Vector y(a.dim);
    for (int i = 0; i < a.dim; ++i) {
        double s = 0.0;
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            s += a.values[k] * x[a.col_idx[k]];
        y[i] = s;
    }
    return y;
}

/// x^T A x evaluated as dot(x, A x).
inline double quad_form(const SparseMatrix& a, const Vector& x) {
    return dot(x, spmv(a, x));
}

/// Entrywise ca*A + cb*B on the merged sparsity pattern.
inline SparseMatrix linear_combine(const SparseMatrix& a, double ca,
                                   const SparseMatrix& b, double cb) {
    if (a.dim != b.dim)
        throw std::invalid_argument("linear_combine: dimension mismatch");
    SparseMatrix c;
    c.dim = a.dim;
    c.row_ptr.assign(a.dim + 1, 0);
    c.col_idx.reserve(std::max(a.col_idx.size(), b.col_idx.size()));
    c.values.reserve(std::max(a.values.size(), b.values.size()));
    for (int i = 0; i < a.dim; ++i) {
        int ka = a.row_ptr[i], kae = a.row_ptr[i + 1];
        int kb = b.row_ptr[i], kbe = b.row_ptr[i + 1];
        while (ka < kae || kb < kbe) {
            int ja = ka < kae ? a.col_idx[ka] : c.dim;
            int jb = kb < kbe ? b.col_idx[kb] : c.dim;
            if (ja < jb) {
                c.col_idx.push_back(ja);
                c.values.push_back(ca * a.values[ka++]);
            } else if (jb < ja) {
                c.col_idx.push_back(jb);
                c.values.push_back(cb * b.values[kb++]);
            } else {
                c.col_idx.push_back(ja);
                c.values.push_back(ca * a.values[ka++] + cb * b.values[kb++]);
            }
        }
        c.row_ptr[i + 1] = static_cast<int>(c.col_idx.size());
    }
    return c;
}

// ---------------------------------------------------------------------------
// Conjugate gradients.

struct CgFailure : std::runtime_error {
    double residual;   // relative residual at abort
    int iterations;
    std::vector<double> last_iterate;
    CgFailure(double r, int it, std::vector<double> x = {})
        : std::runtime_error("cg_solve: no convergence after " +
                             std::to_string(it) +
                             " iterations, relative residual " +
                             std::to_string(r)),
          residual(r), iterations(it), last_iterate(std::move(x)) {}
};

struct CgOptions {
    double tol = 1e-10;              // relative residual ||Ax-b|| <= tol*||b||
    int max_iter = 20000;
    bool jacobi = false;             // diagonal preconditioning
    const Vector* initial_guess = nullptr;
    std::vector<double>* residual_history = nullptr;   // ||r|| per iteration, diagnostics
};

struct CgResult {
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Plain (optionally Jacobi-preconditioned) CG for SPD systems.
inline CgResult cg_solve(const SparseMatrix& a, const Vector& b,
                         const CgOptions& opt = {}) {
    if (static_cast<int>(b.size()) != a.dim)
        throw std::invalid_argument("cg_solve: dimension mismatch");
    const double bnorm = norm2(b);
    CgResult res;
    if (bnorm == 0.0) {
        res.x.assign(a.dim, 0.0);
        return res;
    }

    Vector inv_diag;
    if (opt.jacobi) {
        inv_diag.resize(a.dim);
        for (int i = 0; i < a.dim; ++i) {
            double d = a.diagonal_entry(i);
            inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
        }
    }

    Vector x = opt.initial_guess ? *opt.initial_guess : Vector(a.dim, 0.0);
    Vector r = b;
    if (opt.initial_guess) {
        Vector ax = spmv(a, x);
        for (int i = 0; i < a.dim; ++i) r[i] -= ax[i];
    }
    auto precond = [&](const Vector& v) {
        if (!opt.jacobi) return v;
        Vector z(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) z[i] = inv_diag[i] * v[i];
        return z;
    };

    Vector z = precond(r);
    Vector p = z;
    double rz = dot(r, z);
    double rnorm = norm2(r);
    if (opt.residual_history) opt.residual_history->push_back(rnorm);

    int it = 0;
    while (rnorm > opt.tol * bnorm) {
        if (it >= opt.max_iter) throw CgFailure(rnorm / bnorm, it, std::move(x));
        Vector ap = spmv(a, p);
        double pap = dot(p, ap);
        if (!(pap > 0.0))
            throw CgFailure(rnorm / bnorm, it, std::move(x));   // not SPD (or breakdown)
        double alpha = rz / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        z = precond(r);
        double rz_next = dot(r, z);
        double beta = rz_next / rz;
        rz = rz_next;
        for (int i = 0; i < a.dim; ++i) p[i] = z[i] + beta * p[i];
        rnorm = norm2(r);
        if (opt.residual_history) opt.residual_history->push_back(rnorm);
        ++it;
    }
    res.x = std::move(x);
    res.iterations = it;
    res.relative_residual = rnorm / bnorm;
    return res;
}

// ---------------------------------------------------------------------------
// Extremal generalized eigenvalues of (S, M), M SPD.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Fixed-seed start vector with entries in [-1, 1); never the zero vector.
inline Vector seeded_vector(int dim, std::uint64_t seed = 0x5eedu) {
    Vector v(dim);
    std::uint64_t s = seed;
    for (int i = 0; i < dim; ++i)
        v[i] = 2.0 * ((splitmix64(s) >> 11) * 0x1.0p-53) - 1.0;
    return v;
}

}   // namespace detail

struct EigenEstimateFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Largest generalized eigenvalue of (S, M): the norm of M^{-1} S on the
/// M-inner-product space. Power iteration; every application of M^{-1} is a
/// CG solve.
inline double estimate_operator_norm(const SparseMatrix& s, const SparseMatrix& m,
                                     double tol = 1e-10, int max_iter = 1000) {
    if (s.dim != m.dim)
        throw std::invalid_argument("estimate_operator_norm: dimension mismatch");
    CgOptions inner;
    inner.tol = 1e-12;

    Vector x = detail::seeded_vector(s.dim);
    {   // normalize in the M-norm
        double mn = std::sqrt(quad_form(m, x));
        for (auto& v : x) v /= mn;
    }
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector sx = spmv(s, x);
        double num = dot(x, sx);
        if (norm2(sx) == 0.0) return 0.0;            // S annihilates the iterate
        double lambda_next = num;                    // x is M-normalized
        Vector y = cg_solve(m, sx, inner).x;         // y = M^{-1} S x
        double yn = std::sqrt(quad_form(m, y));
        if (yn == 0.0) return 0.0;
        for (auto& v : y) v /= yn;
        x = std::move(y);
        if (it > 0 && std::abs(lambda_next - lambda) <=
                          tol * std::max(std::abs(lambda_next), 1e-300))
            return lambda_next;
        lambda = lambda_next;
    }
    throw EigenEstimateFailure("estimate_operator_norm: no convergence after " +
                               std::to_string(max_iter) + " iterations");
}

/// Smallest generalized eigenvalue of (K, M), both SPD. Inverse power
/// iteration with CG inner solves on K.
inline double estimate_lambda_min(const SparseMatrix& k, const SparseMatrix& m,
                                  double tol = 1e-8, int max_iter = 1000) {
    if (k.dim != m.dim)
        throw std::invalid_argument("estimate_lambda_min: dimension mismatch");
    CgOptions inner;
    inner.tol = 1e-12;

    Vector x = detail::seeded_vector(k.dim);
    double mn = std::sqrt(quad_form(m, x));
    for (auto& v : x) v /= mn;
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector mx = spmv(m, x);
        Vector y = cg_solve(k, mx, inner).x;         // y = K^{-1} M x
        double yn = std::sqrt(quad_form(m, y));
        if (yn == 0.0)
            throw EigenEstimateFailure("estimate_lambda_min: breakdown");
        for (auto& v : y) v /= yn;
        double lambda_next = quad_form(k, y);        // Rayleigh quotient, y M-normalized
        x = std::move(y);
        if (it > 0 && std::abs(lambda_next - lambda) <=
                          tol * std::max(std::abs(lambda_next), 1e-300))
            return lambda_next;
        lambda = lambda_next;
    }
    throw EigenEstimateFailure("estimate_lambda_min: no convergence after " +
                               std::to_string(max_iter) + " iterations");
}

}   // namespace fracstep
