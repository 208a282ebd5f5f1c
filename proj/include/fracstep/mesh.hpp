#pragma once

// Uniform P1 triangulation of the unit square (0,1)^2.
//
// Vertices sit on an (n+1)x(n+1) lattice in row-major order: vertex (i,j) at
// (i*h, j*h) has index j*(n+1)+i, h = 1/n. Every lattice cell is split along
// its lower-left -> upper-right diagonal into two counterclockwise triangles.
// The row-major ordering fixes the matrix bandwidth at n+2 and, together with
// the fixed diagonal, makes every downstream result bit-reproducible.

#include <array>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracstep {

struct Mesh {
    int n = 0;                                       // intervals per side
    std::vector<std::array<double, 2>> vertices;     // (n+1)^2, row-major
    std::vector<std::array<int, 3>> triangles;       // 2n^2, ccw
    std::vector<std::array<int, 2>> boundary_edges;  // 4n

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
};

inline Mesh build_uniform_mesh(int n) {
    if (n < 1) throw std::invalid_argument("build_uniform_mesh: n must be >= 1");
    Mesh mesh;
    mesh.n = n;
    const double h = 1.0 / n;
    const int side = n + 1;

    mesh.vertices.reserve(side * side);
    for (int j = 0; j < side; ++j)
        for (int i = 0; i < side; ++i)
            mesh.vertices.push_back({i * h, j * h});

    auto vid = [side](int i, int j) { return j * side + i; };

    mesh.triangles.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int a = vid(i, j);
            const int b = vid(i + 1, j);
            const int c = vid(i + 1, j + 1);
            const int d = vid(i, j + 1);
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
        }
    }

    mesh.boundary_edges.reserve(4 * n);
    for (int i = 0; i < n; ++i) mesh.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0)});
    for (int j = 0; j < n; ++j) mesh.boundary_edges.push_back({vid(n, j), vid(n, j + 1)});
    for (int i = n; i > 0; --i) mesh.boundary_edges.push_back({vid(i, n), vid(i - 1, n)});
    for (int j = n; j > 0; --j) mesh.boundary_edges.push_back({vid(0, j), vid(0, j - 1)});
    return mesh;
}

struct TriangleGeometry {
    std::array<std::array<double, 2>, 3> coords;
    double area;
    std::array<std::array<double, 2>, 3> basis_gradients;  // sum to (0,0)
    std::array<double, 2> centroid;
};

inline TriangleGeometry triangle_geometry(const Mesh& mesh, int t) {
    if (t < 0 || t >= mesh.triangle_count())
        throw std::out_of_range("triangle_geometry: index out of range");
    const auto& tri = mesh.triangles[t];
    TriangleGeometry g;
    for (int v = 0; v < 3; ++v) g.coords[v] = mesh.vertices[tri[v]];
    const auto& p0 = g.coords[0];
    const auto& p1 = g.coords[1];
    const auto& p2 = g.coords[2];
    const double twice_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) -
                              (p2[0] - p0[0]) * (p1[1] - p0[1]);
    g.area = 0.5 * twice_area;
    // grad of the hat function at vertex v is perpendicular to the opposite
    // edge, scaled by 1/(2*area)
    g.basis_gradients[0] = {(p1[1] - p2[1]) / twice_area, (p2[0] - p1[0]) / twice_area};
    g.basis_gradients[1] = {(p2[1] - p0[1]) / twice_area, (p0[0] - p2[0]) / twice_area};
    g.basis_gradients[2] = {(p0[1] - p1[1]) / twice_area, (p1[0] - p0[0]) / twice_area};
    g.centroid = {(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0};
    return g;
}

inline void write_vertices_csv(const Mesh& mesh, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fputs("vertex_id,x1,x2\n", f);
    for (int i = 0; i < mesh.vertex_count(); ++i)
        std::fprintf(f, "%d,%.17g,%.17g\n", i, mesh.vertices[i][0], mesh.vertices[i][1]);
    std::fclose(f);
}

inline void write_triangles_csv(const Mesh& mesh, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fputs("triangle_id,v0,v1,v2\n", f);
    for (int t = 0; t < mesh.triangle_count(); ++t)
        std::fprintf(f, "%d,%d,%d,%d\n", t, mesh.triangles[t][0], mesh.triangles[t][1],
                     mesh.triangles[t][2]);
    std::fclose(f);
}

}   // namespace fracstep
