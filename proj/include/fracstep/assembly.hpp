#pragma once

// P1 finite-element assembly on the uniform mesh: stiffness for the bilinear
// form  a(u,v) = int k grad u . grad v + c u v dx + int_bdry mu u v ds,
// consistent mass, the pure-Laplacian seminorm matrix, and the L2 projection
// of a source function.
//
// Coefficient handling: k and c are sampled at the triangle centroid and the
// P1 basis products are integrated exactly, so a(u,v) with constant
// coefficients is assembled exactly (in particular K = G + M when k=c=1,
// mu=0). The boundary term uses the two-point trapezoid rule per edge. The
// source integrals use the three-edge-midpoint rule, exact for quadratics,
// so projecting an f that already lies in the P1 space returns its nodal
// vector.

#include <functional>

#include "fracstep/mesh.hpp"
#include "fracstep/sparse.hpp"

namespace fracstep {

using ScalarField = std::function<double(double, double)>;

struct CoefficientField {
    ScalarField k;    // diffusion, 0 < k1 <= k <= k2
    ScalarField c;    // reaction, c >= c0 > 0
    ScalarField mu;   // boundary, mu >= 0
    ScalarField f;    // source
};

inline SparseMatrix assemble_stiffness(const Mesh& mesh, const CoefficientField& coeffs) {
    SparseBuilder builder(mesh.vertex_count());
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const TriangleGeometry g = triangle_geometry(mesh, t);
        const auto& tri = mesh.triangles[t];
        const double kc = coeffs.k(g.centroid[0], g.centroid[1]);
        const double cc = coeffs.c(g.centroid[0], g.centroid[1]);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double grad_ij = g.basis_gradients[i][0] * g.basis_gradients[j][0] +
                                       g.basis_gradients[i][1] * g.basis_gradients[j][1];
                const double mass_ij = (i == j ? 2.0 : 1.0) * g.area / 12.0;
                builder.add(tri[i], tri[j], kc * g.area * grad_ij + cc * mass_ij);
            }
        }
    }
    for (const auto& edge : mesh.boundary_edges) {
        const auto& pa = mesh.vertices[edge[0]];
        const auto& pb = mesh.vertices[edge[1]];
        const double len = std::sqrt((pb[0] - pa[0]) * (pb[0] - pa[0]) +
                                     (pb[1] - pa[1]) * (pb[1] - pa[1]));
        // trapezoid rule: only the endpoint products survive
        builder.add(edge[0], edge[0], 0.5 * len * coeffs.mu(pa[0], pa[1]));
        builder.add(edge[1], edge[1], 0.5 * len * coeffs.mu(pb[0], pb[1]));
    }
    return builder.build();
}

inline SparseMatrix assemble_mass(const Mesh& mesh) {
    SparseBuilder builder(mesh.vertex_count());
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const TriangleGeometry g = triangle_geometry(mesh, t);
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                builder.add(tri[i], tri[j], (i == j ? 2.0 : 1.0) * g.area / 12.0);
    }
    return builder.build();
}

/// Pure-Laplacian matrix (k=1, c=0, mu=0); M + G is the discrete H1 norm.
inline SparseMatrix assemble_seminorm(const Mesh& mesh) {
    CoefficientField unit_laplace{
        [](double, double) { return 1.0; },
        [](double, double) { return 0.0; },
        [](double, double) { return 0.0; },
        [](double, double) { return 0.0; },
    };
    return assemble_stiffness(mesh, unit_laplace);
}

/// L2 projection of f onto the P1 space: solves M psi = b with
/// b_i = int f chi_i dx (edge-midpoint quadrature, exact for f in P2).
inline Vector project_rhs(const Mesh& mesh, const ScalarField& f, const SparseMatrix& m,
                          double cg_tol = 1e-12) {
    Vector b(mesh.vertex_count(), 0.0);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const TriangleGeometry g = triangle_geometry(mesh, t);
        const auto& tri = mesh.triangles[t];
        const double w = g.area / 3.0;
        for (int e = 0; e < 3; ++e) {
            const int va = e, vb = (e + 1) % 3;
            const double mx = 0.5 * (g.coords[va][0] + g.coords[vb][0]);
            const double my = 0.5 * (g.coords[va][1] + g.coords[vb][1]);
            const double fv = f(mx, my);
            b[tri[va]] += w * fv * 0.5;
            b[tri[vb]] += w * fv * 0.5;
        }
    }
    CgOptions opt;
    opt.tol = cg_tol;
    return cg_solve(m, b, opt).x;   // CgFailure here means the mass matrix is broken
}

struct AssembledSystem {
    SparseMatrix stiffness;   // K
    SparseMatrix mass;        // M
    SparseMatrix seminorm;    // G
    Vector psi;               // L2 projection of f
};

inline AssembledSystem assemble_system(const Mesh& mesh, const CoefficientField& coeffs,
                                       double cg_tol = 1e-12) {
    AssembledSystem sys;
    sys.stiffness = assemble_stiffness(mesh, coeffs);
    sys.mass = assemble_mass(mesh);
    sys.seminorm = assemble_seminorm(mesh);
    sys.psi = project_rhs(mesh, coeffs.f, sys.mass, cg_tol);
    return sys;
}

}   // namespace fracstep
