#pragma once

// Dense spectral ground truth at small scale. Solves the full generalized
// eigenproblem K phi = lambda M phi by Cholesky reduction to a standard
// symmetric problem and cyclic Jacobi rotations, and evaluates matrix
// functions of the discrete operator exactly through the eigenpairs:
// fractional powers and the closed-form pseudo-time evolution.
//
// Intentionally O(dim^3) and guarded by a dimension cap; this module is the
// measuring instrument the iterative schemes are tested against, not a
// production solver.

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "fracstep/sparse.hpp"

namespace fracstep {

struct EigenDecomposition {
    std::vector<double> lambdas;        // ascending
    std::vector<Vector> phis;           // phi_k^T M phi_k = 1
};

namespace detail {

// row-major dense helpers
inline double& at(std::vector<double>& a, int n, int i, int j) { return a[i * n + j]; }
inline double at(const std::vector<double>& a, int n, int i, int j) { return a[i * n + j]; }

inline std::vector<double> densify(const SparseMatrix& s) {
    std::vector<double> d(static_cast<std::size_t>(s.dim) * s.dim, 0.0);
    for (int i = 0; i < s.dim; ++i)
        for (int k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k)
            at(d, s.dim, i, s.col_idx[k]) = s.values[k];
    return d;
}

/// In-place lower Cholesky factor; throws if the matrix is not SPD.
inline std::vector<double> cholesky(const std::vector<double>& m, int n) {
    std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = at(m, n, i, j);
            for (int k = 0; k < j; ++k) s -= at(l, n, i, k) * at(l, n, j, k);
            if (i == j) {
                if (!(s > 0.0))
                    throw std::runtime_error("dense_generalized_eig: mass matrix not SPD");
                at(l, n, i, j) = std::sqrt(s);
            } else {
                at(l, n, i, j) = s / at(l, n, j, j);
            }
        }
    }
    return l;
}

/// Solves L y = b in place (forward substitution), b given as column j of a.
inline void forward_solve_column(const std::vector<double>& l, int n,
                                 std::vector<double>& a, int j) {
    for (int i = 0; i < n; ++i) {
        double s = at(a, n, i, j);
        for (int k = 0; k < i; ++k) s -= at(l, n, i, k) * at(a, n, k, j);
        at(a, n, i, j) = s / at(l, n, i, i);
    }
}

inline void transpose_in_place(std::vector<double>& a, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            std::swap(at(a, n, i, j), at(a, n, j, i));
}

inline double off_diagonal_frobenius(const std::vector<double>& a, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) s += at(a, n, i, j) * at(a, n, i, j);
    return std::sqrt(s);
}

}   // namespace detail

/// Full generalized eigendecomposition of (K, M), M SPD. Dense O(dim^3);
/// rejects systems above dim_cap.
inline EigenDecomposition dense_generalized_eig(const SparseMatrix& k_mat,
                                                const SparseMatrix& m_mat,
                                                int dim_cap = 1500) {
    using namespace detail;
    if (k_mat.dim != m_mat.dim)
        throw std::invalid_argument("dense_generalized_eig: dimension mismatch");
    const int n = k_mat.dim;
    if (n > dim_cap)
        throw std::invalid_argument("dense_generalized_eig: dimension " + std::to_string(n) +
                                    " exceeds cap " + std::to_string(dim_cap));

    const std::vector<double> l = cholesky(densify(m_mat), n);

    // C = L^{-1} K L^{-T}, via two sweeps of forward substitutions
    std::vector<double> c = densify(k_mat);
    for (int j = 0; j < n; ++j) forward_solve_column(l, n, c, j);
    transpose_in_place(c, n);
    for (int j = 0; j < n; ++j) forward_solve_column(l, n, c, j);
    for (int i = 0; i < n; ++i)          // clean roundoff asymmetry
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (at(c, n, i, j) + at(c, n, j, i));
            at(c, n, i, j) = v;
            at(c, n, j, i) = v;
        }

    // cyclic Jacobi with eigenvector accumulation
    std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) at(v, n, i, i) = 1.0;
    double frob = 0.0;
    for (double x : c) frob += x * x;
    frob = std::sqrt(frob);
    const double threshold = 1e-12 * std::max(frob, 1e-300);
    const int max_sweeps = 100;

    int sweep = 0;
    while (off_diagonal_frobenius(c, n) > threshold) {
        if (sweep++ >= max_sweeps)
            throw std::runtime_error("dense_generalized_eig: Jacobi sweep cap exceeded");
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double cpq = at(c, n, p, q);
                if (cpq == 0.0) continue;
                const double theta = (at(c, n, q, q) - at(c, n, p, p)) / (2.0 * cpq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (int i = 0; i < n; ++i) {
                    const double cip = at(c, n, i, p), ciq = at(c, n, i, q);
                    at(c, n, i, p) = cs * cip - sn * ciq;
                    at(c, n, i, q) = sn * cip + cs * ciq;
                }
                for (int i = 0; i < n; ++i) {
                    const double cpi = at(c, n, p, i), cqi = at(c, n, q, i);
                    at(c, n, p, i) = cs * cpi - sn * cqi;
                    at(c, n, q, i) = sn * cpi + cs * cqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = at(v, n, i, p), viq = at(v, n, i, q);
                    at(v, n, i, p) = cs * vip - sn * viq;
                    at(v, n, i, q) = sn * vip + cs * viq;
                }
            }
        }
    }

    // back-substitute phi = L^{-T} y and M-normalize
    EigenDecomposition eig;
    eig.lambdas.resize(n);
    eig.phis.assign(n, Vector(n));
    for (int col = 0; col < n; ++col) {
        eig.lambdas[col] = at(c, n, col, col);
        Vector phi(n);
        for (int i = n - 1; i >= 0; --i) {
            double s = at(v, n, i, col);
            for (int j = i + 1; j < n; ++j) s -= at(l, n, j, i) * phi[j];
            phi[i] = s / at(l, n, i, i);
        }
        const double mn = std::sqrt(quad_form(m_mat, phi));
        for (auto& x : phi) x /= mn;
        eig.phis[col] = std::move(phi);
    }

    // ascending eigenvalues; ties broken by the first non-negligible
    // eigenvector component, whose sign is also normalized to +
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto first_nonzero = [&](int col) {
        const Vector& phi = eig.phis[col];
        for (int i = 0; i < n; ++i)
            if (std::abs(phi[i]) > 1e-12) return i;
        return n;
    };
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (eig.lambdas[a] != eig.lambdas[b]) return eig.lambdas[a] < eig.lambdas[b];
        return first_nonzero(a) < first_nonzero(b);
    });
    EigenDecomposition sorted;
    sorted.lambdas.resize(n);
    sorted.phis.resize(n);
    for (int idx = 0; idx < n; ++idx) {
        sorted.lambdas[idx] = eig.lambdas[order[idx]];
        Vector& phi = eig.phis[order[idx]];
        const int fn = first_nonzero(order[idx]);
        if (fn < n && phi[fn] < 0.0)
            for (auto& x : phi) x = -x;
        sorted.phis[idx] = std::move(phi);
    }
    return sorted;
}

inline double lambda_min(const EigenDecomposition& eig) { return eig.lambdas.front(); }

/// Applies the power function of the discrete operator spectrally:
/// sum_k (x^T M phi_k) lambda_k^power phi_k. power = -alpha solves the
/// fractional problem exactly.
inline Vector fractional_apply(const EigenDecomposition& eig, const SparseMatrix& m,
                               double power, const Vector& x) {
    const Vector mx = spmv(m, x);
    Vector y(x.size(), 0.0);
    for (std::size_t k = 0; k < eig.lambdas.size(); ++k) {
        const double coeff = dot(eig.phis[k], mx) * std::pow(eig.lambdas[k], power);
        axpy(coeff, eig.phis[k], y);
    }
    return y;
}

/// Exact solution of the pseudo-time problem:
/// w(t) = delta^alpha (t (A - delta I) + delta I)^{-alpha} w0.
inline Vector exact_evolution(const EigenDecomposition& eig, const SparseMatrix& m,
                              double delta, double alpha, double t, const Vector& w0) {
    if (delta >= eig.lambdas.front())
        throw std::invalid_argument("exact_evolution: delta must be below lambda_1");
    const Vector mw = spmv(m, w0);
    const double da = std::pow(delta, alpha);
    Vector y(w0.size(), 0.0);
    for (std::size_t k = 0; k < eig.lambdas.size(); ++k) {
        const double denom = t * (eig.lambdas[k] - delta) + delta;
        const double coeff = dot(eig.phis[k], mw) * da * std::pow(denom, -alpha);
        axpy(coeff, eig.phis[k], y);
    }
    return y;
}

inline void write_spectrum_csv(const EigenDecomposition& eig, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fputs("k,lambda\n", f);
    for (std::size_t k = 0; k < eig.lambdas.size(); ++k)
        std::fprintf(f, "%zu,%.17g\n", k + 1, eig.lambdas[k]);
    std::fclose(f);
}

}   // namespace fracstep
