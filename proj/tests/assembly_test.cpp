#include <gtest/gtest.h>

#include "fracstep/assembly.hpp"
#include "fracstep/oracle.hpp"
#include "test_support.hpp"

using namespace fracstep;
using test_support::constant_coefficients;
using test_support::paper5_coefficients;
using test_support::Rng;

namespace {

double max_abs_entry_diff(const SparseMatrix& a, const SparseMatrix& b) {
    const SparseMatrix d = linear_combine(a, 1.0, b, -1.0);
    double worst = 0.0;
    for (double v : d.values) worst = std::max(worst, std::abs(v));
    return worst;
}

double max_asymmetry(const SparseMatrix& a) {
    double worst = 0.0;
    for (int i = 0; i < a.dim; ++i)
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            const int j = a.col_idx[k];
            double aji = 0.0;
            for (int kk = a.row_ptr[j]; kk < a.row_ptr[j + 1]; ++kk)
                if (a.col_idx[kk] == i) aji = a.values[kk];
            worst = std::max(worst, std::abs(a.values[k] - aji));
        }
    return worst;
}

}   // namespace

TEST(Stiffness, PureLaplaceRowSumsVanish) {
    const Mesh mesh = build_uniform_mesh(5);
    const SparseMatrix g = assemble_stiffness(mesh, constant_coefficients(1, 0, 0, 0));
    for (int i = 0; i < g.dim; ++i) {
        double row = 0.0;
        for (int k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) row += g.values[k];
        EXPECT_NEAR(row, 0.0, 1e-12);
    }
}

TEST(Stiffness, UnitCoefficientsDecomposeAdditively) {
    const Mesh mesh = build_uniform_mesh(4);
    const SparseMatrix k = assemble_stiffness(mesh, constant_coefficients(1, 1, 0, 0));
    const SparseMatrix g = assemble_seminorm(mesh);
    const SparseMatrix m = assemble_mass(mesh);
    const SparseMatrix g_plus_m = linear_combine(g, 1.0, m, 1.0);
    EXPECT_LE(max_abs_entry_diff(k, g_plus_m), 1e-12);
}

TEST(Stiffness, ModelCoefficientsGiveSpdSystem) {
    const Mesh mesh = build_uniform_mesh(50);
    const SparseMatrix k = assemble_stiffness(mesh, paper5_coefficients());
    EXPECT_EQ(max_asymmetry(k), 0.0);
    Rng rng(5);
    const Vector b = rng.vector(k.dim);
    CgOptions opt;
    opt.tol = 1e-10;
    const CgResult res = cg_solve(k, b, opt);   // converges only if SPD
    EXPECT_LE(res.relative_residual, 1e-10);
}

TEST(Stiffness, BitwiseSymmetric) {
    const Mesh mesh = build_uniform_mesh(6);
    EXPECT_EQ(max_asymmetry(assemble_stiffness(mesh, paper5_coefficients())), 0.0);
    EXPECT_EQ(max_asymmetry(assemble_mass(mesh)), 0.0);
    EXPECT_EQ(max_asymmetry(assemble_seminorm(mesh)), 0.0);
}

TEST(Stiffness, CoefficientTermsAdditive) {
    const Mesh mesh = build_uniform_mesh(4);
    const CoefficientField smooth{
        [](double x, double y) { return 1.0 + 0.5 * x + 0.25 * y; },
        [](double x, double y) { return 2.0 + x * y; },
        [](double x, double y) { return 1.0 + x + y; },
        [](double, double) { return 0.0; },
    };
    const auto zero = [](double, double) { return 0.0; };
    const SparseMatrix full = assemble_stiffness(mesh, smooth);
    const SparseMatrix k_only =
        assemble_stiffness(mesh, {smooth.k, zero, zero, smooth.f});
    const SparseMatrix c_only =
        assemble_stiffness(mesh, {zero, smooth.c, zero, smooth.f});
    const SparseMatrix mu_only =
        assemble_stiffness(mesh, {zero, zero, smooth.mu, smooth.f});
    const SparseMatrix sum =
        linear_combine(linear_combine(k_only, 1.0, c_only, 1.0), 1.0, mu_only, 1.0);
    EXPECT_LE(max_abs_entry_diff(full, sum), 1e-12);
}

TEST(Stiffness, CoercivityBoundedBelowByReaction) {
    // lambda_1(K, M) >= min c for k > 0, mu >= 0
    const Mesh mesh = build_uniform_mesh(6);
    const SparseMatrix k = assemble_stiffness(mesh, paper5_coefficients());
    const SparseMatrix m = assemble_mass(mesh);
    const EigenDecomposition eig = dense_generalized_eig(k, m);
    EXPECT_GE(eig.lambdas.front(), 1.0 - 1e-10);
}

TEST(Mass, TotalSumIsDomainArea) {
    for (int n : {1, 3, 8}) {
        const Mesh mesh = build_uniform_mesh(n);
        const SparseMatrix m = assemble_mass(mesh);
        double total = 0.0;
        for (double v : m.values) total += v;
        EXPECT_NEAR(total, 1.0, 1e-12) << "n=" << n;
    }
}

TEST(Mass, SingleTriangleVertexDiagonal) {
    // on the n=1 mesh the off-diagonal lattice corners belong to exactly one
    // triangle, so their diagonal entry is 2*area/12 = 1/12
    const Mesh mesh = build_uniform_mesh(1);
    const SparseMatrix m = assemble_mass(mesh);
    EXPECT_NEAR(m.diagonal_entry(1), 1.0 / 12.0, 1e-15);   // vertex (1,0)
    EXPECT_NEAR(m.diagonal_entry(2), 1.0 / 12.0, 1e-15);   // vertex (0,1)
}

TEST(Mass, ConstantVectorQuadraticForm) {
    const Mesh mesh = build_uniform_mesh(4);
    const SparseMatrix m = assemble_mass(mesh);
    EXPECT_NEAR(quad_form(m, Vector(m.dim, 1.0)), 1.0, 1e-12);
}

TEST(Seminorm, AnnihilatesConstants) {
    const Mesh mesh = build_uniform_mesh(5);
    const SparseMatrix g = assemble_seminorm(mesh);
    const Vector y = spmv(g, Vector(g.dim, 1.0));
    for (double v : y) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Seminorm, PositiveSemidefinite) {
    const Mesh mesh = build_uniform_mesh(4);
    const SparseMatrix g = assemble_seminorm(mesh);
    EXPECT_EQ(max_asymmetry(g), 0.0);
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial)
        EXPECT_GE(quad_form(g, rng.vector(g.dim)), -1e-12);
}

TEST(Seminorm, EqualsPureLaplaceStiffness) {
    const Mesh mesh = build_uniform_mesh(4);
    const SparseMatrix g = assemble_seminorm(mesh);
    const SparseMatrix k = assemble_stiffness(mesh, constant_coefficients(1, 0, 0, 0));
    EXPECT_EQ(g.values, k.values);
    EXPECT_EQ(g.col_idx, k.col_idx);
}

TEST(ProjectRhs, ConstantSourceProjectsToOnes) {
    const Mesh mesh = build_uniform_mesh(6);
    const SparseMatrix m = assemble_mass(mesh);
    const Vector psi = project_rhs(
        mesh, [](double, double) { return 1.0; }, m);
    for (double v : psi) EXPECT_NEAR(v, 1.0, 1e-10);
}

TEST(ProjectRhs, NodalBasisFunctionProjectsToUnitVector) {
    const Mesh mesh = build_uniform_mesh(4);
    const SparseMatrix m = assemble_mass(mesh);
    const int j = 2 * (mesh.n + 1) + 2;   // interior vertex
    const auto& pj = mesh.vertices[j];
    const double h = 1.0 / mesh.n;
    // hat function at vertex j, evaluated through barycentric drop-off on the
    // uniform grid
    auto hat = [&](double x, double y) {
        const double dx = (x - pj[0]) / h, dy = (y - pj[1]) / h;
        double v;
        if (dx * dy >= 0.0)
            v = 1.0 - std::max(std::abs(dx), std::abs(dy));
        else
            v = 1.0 - std::abs(dx) - std::abs(dy);
        return std::max(v, 0.0);
    };
    const Vector psi = project_rhs(mesh, hat, m);
    for (int i = 0; i < m.dim; ++i)
        EXPECT_NEAR(psi[i], i == j ? 1.0 : 0.0, 1e-10) << "entry " << i;
}

TEST(ProjectRhs, ZeroSource) {
    const Mesh mesh = build_uniform_mesh(3);
    const SparseMatrix m = assemble_mass(mesh);
    const Vector psi = project_rhs(
        mesh, [](double, double) { return 0.0; }, m);
    for (double v : psi) EXPECT_EQ(v, 0.0);
}

TEST(ProjectRhs, BrokenMassMatrixSignalsCgFailure) {
    const Mesh mesh = build_uniform_mesh(3);
    SparseBuilder broken(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i)
        broken.add(i, i, i % 2 ? 1.0 : -1.0);   // indefinite
    EXPECT_THROW(project_rhs(
                     mesh, [](double, double) { return 1.0; }, broken.build()),
                 CgFailure);
}
