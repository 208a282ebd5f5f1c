#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fracstep/mesh.hpp"

using namespace fracstep;

TEST(Mesh, SmallestMeshCounts) {
    const Mesh mesh = build_uniform_mesh(1);
    EXPECT_EQ(mesh.vertex_count(), 4);
    EXPECT_EQ(mesh.triangle_count(), 2);
    EXPECT_EQ(mesh.boundary_edges.size(), 4u);
}

TEST(Mesh, ModelGridCounts) {
    const Mesh mesh = build_uniform_mesh(50);
    EXPECT_EQ(mesh.vertex_count(), 2601);
    EXPECT_EQ(mesh.triangle_count(), 5000);
    EXPECT_EQ(mesh.boundary_edges.size(), 200u);
}

TEST(Mesh, RejectsZeroIntervals) {
    EXPECT_THROW(build_uniform_mesh(0), std::invalid_argument);
    EXPECT_THROW(build_uniform_mesh(-3), std::invalid_argument);
}

TEST(Mesh, InvariantsAcrossSizes) {
    for (int n : {1, 2, 3, 5, 8}) {
        const Mesh mesh = build_uniform_mesh(n);
        EXPECT_EQ(mesh.vertex_count(), (n + 1) * (n + 1));
        EXPECT_EQ(mesh.triangle_count(), 2 * n * n);
        EXPECT_EQ(static_cast<int>(mesh.boundary_edges.size()), 4 * n);

        const double expected_area = 1.0 / (2.0 * n * n);
        double total = 0.0;
        for (int t = 0; t < mesh.triangle_count(); ++t) {
            const TriangleGeometry g = triangle_geometry(mesh, t);
            EXPECT_GT(g.area, 0.0);
            EXPECT_NEAR(g.area, expected_area, 1e-15);
            total += g.area;
        }
        EXPECT_NEAR(total, 1.0, 1e-12) << "n=" << n;
    }
}

TEST(Mesh, TriangleGeometryOnUnitCell) {
    const Mesh mesh = build_uniform_mesh(1);
    const TriangleGeometry g = triangle_geometry(mesh, 0);
    EXPECT_NEAR(g.area, 0.5, 1e-15);
    // right triangle with legs h = 1 along the axes: gradient components in
    // {-1/h, 0, 1/h}
    for (const auto& grad : g.basis_gradients)
        for (double comp : grad)
            EXPECT_TRUE(comp == 0.0 || std::abs(std::abs(comp) - 1.0) < 1e-15)
                << comp;
}

TEST(Mesh, BasisGradientsSumToZero) {
    // gradient partition of unity: the three hat functions sum to 1 on the
    // triangle, so their gradients cancel
    for (int n : {1, 2, 7}) {
        const Mesh mesh = build_uniform_mesh(n);
        for (int t = 0; t < mesh.triangle_count(); ++t) {
            const TriangleGeometry g = triangle_geometry(mesh, t);
            const double gx = g.basis_gradients[0][0] + g.basis_gradients[1][0] +
                              g.basis_gradients[2][0];
            const double gy = g.basis_gradients[0][1] + g.basis_gradients[1][1] +
                              g.basis_gradients[2][1];
            EXPECT_NEAR(gx, 0.0, 1e-12);
            EXPECT_NEAR(gy, 0.0, 1e-12);
        }
    }
}

TEST(Mesh, BarycentricPartitionOfUnityAtSampledPoints) {
    // the linear basis value at x is 1/3 + grad.(x - centroid); the three
    // values must sum to 1 anywhere in the triangle
    const Mesh mesh = build_uniform_mesh(4);
    for (int t = 0; t < mesh.triangle_count(); t += 3) {
        const TriangleGeometry g = triangle_geometry(mesh, t);
        for (double u : {0.1, 0.35, 0.8}) {
            for (double v : {0.05, 0.4}) {
                if (u + v >= 1.0) continue;
                const double x = g.coords[0][0] +
                                 u * (g.coords[1][0] - g.coords[0][0]) +
                                 v * (g.coords[2][0] - g.coords[0][0]);
                const double y = g.coords[0][1] +
                                 u * (g.coords[1][1] - g.coords[0][1]) +
                                 v * (g.coords[2][1] - g.coords[0][1]);
                double sum = 0.0;
                for (int i = 0; i < 3; ++i)
                    sum += 1.0 / 3.0 + g.basis_gradients[i][0] * (x - g.centroid[0]) +
                           g.basis_gradients[i][1] * (y - g.centroid[1]);
                EXPECT_NEAR(sum, 1.0, 1e-12);
            }
        }
    }
}

TEST(Mesh, TriangleGeometryRejectsBadIndex) {
    const Mesh mesh = build_uniform_mesh(2);
    EXPECT_THROW(triangle_geometry(mesh, -1), std::out_of_range);
    EXPECT_THROW(triangle_geometry(mesh, mesh.triangle_count()), std::out_of_range);
}

TEST(Mesh, CsvDumps) {
    namespace fs = std::filesystem;
    const Mesh mesh = build_uniform_mesh(2);
    const fs::path dir = fs::temp_directory_path() / "fracstep_mesh_test";
    fs::create_directories(dir);
    write_vertices_csv(mesh, (dir / "v.csv").string());
    write_triangles_csv(mesh, (dir / "t.csv").string());

    auto count_lines = [](const fs::path& p) {
        std::ifstream in(p);
        int lines = 0;
        std::string line;
        while (std::getline(in, line)) ++lines;
        return lines;
    };
    EXPECT_EQ(count_lines(dir / "v.csv"), 1 + mesh.vertex_count());
    EXPECT_EQ(count_lines(dir / "t.csv"), 1 + mesh.triangle_count());

    std::ifstream in(dir / "v.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "vertex_id,x1,x2");
    fs::remove_all(dir);
}
