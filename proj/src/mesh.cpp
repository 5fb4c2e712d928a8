#include "droplet/mesh.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace droplet {

const char* to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::Bottom: return "bottom";
        case BoundaryTag::Top: return "top";
        case BoundaryTag::Left: return "left";
        case BoundaryTag::Right: return "right";
    }
    return "?";
}

double Mesh::triangle_area(int t) const {
    const auto& tri = triangles[t];
    const Vec2 a = nodes[tri[0]], b = nodes[tri[1]], c = nodes[tri[2]];
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double Mesh::total_area() const {
    double area = 0.0;
    for (int t = 0; t < triangle_count(); ++t) area += triangle_area(t);
    return area;
}

void Mesh::validate() const {
    for (int t = 0; t < triangle_count(); ++t) {
        if (triangle_area(t) <= 0.0)
            throw std::runtime_error("mesh: triangle " + std::to_string(t) + " has non-positive area");
    }
    // Each boundary edge must appear in exactly one triangle.
    std::map<std::pair<int, int>, int> edge_use;
    for (const auto& tri : triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = tri[k], b = tri[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            edge_use[{a, b}]++;
        }
    }
    for (const auto& be : boundary_edges) {
        int a = be.v[0], b = be.v[1];
        if (a > b) std::swap(a, b);
        auto it = edge_use.find({a, b});
        if (it == edge_use.end() || it->second != 1)
            throw std::runtime_error("mesh: boundary edge not owned by exactly one triangle");
    }
}

Mesh build_rect_mesh(int nx, int ny, double lx, double ly) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_rect_mesh: cell counts must be >= 1");
    if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("build_rect_mesh: dimensions must be positive");

    Mesh mesh;
    const int nvx = nx + 1, nvy = ny + 1;
    mesh.nodes.reserve(static_cast<size_t>(nvx) * nvy);
    for (int ix = 0; ix < nvx; ++ix)
        for (int iy = 0; iy < nvy; ++iy)
            mesh.nodes.emplace_back(lx * ix / nx, ly * iy / ny);

    auto node = [nvy](int ix, int iy) { return ix * nvy + iy; };

    mesh.triangles.reserve(static_cast<size_t>(2) * nx * ny);
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
            const int n00 = node(ix, iy), n10 = node(ix + 1, iy);
            const int n01 = node(ix, iy + 1), n11 = node(ix + 1, iy + 1);
            // Diagonal from lower-left to upper-right, both triangles CCW.
            mesh.triangles.push_back({n00, n10, n11});
            mesh.triangles.push_back({n00, n11, n01});
        }
    }

    for (int ix = 0; ix < nx; ++ix)
        mesh.boundary_edges.push_back({{node(ix, 0), node(ix + 1, 0)}, BoundaryTag::Bottom});
    for (int ix = 0; ix < nx; ++ix)
        mesh.boundary_edges.push_back({{node(ix + 1, ny), node(ix, ny)}, BoundaryTag::Top});
    for (int iy = 0; iy < ny; ++iy)
        mesh.boundary_edges.push_back({{node(0, iy + 1), node(0, iy)}, BoundaryTag::Left});
    for (int iy = 0; iy < ny; ++iy)
        mesh.boundary_edges.push_back({{node(nx, iy), node(nx, iy + 1)}, BoundaryTag::Right});

    return mesh;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
    os << "nodes " << mesh.node_count() << " triangles " << mesh.triangle_count() << "\n";
    os.precision(17);
    for (const auto& p : mesh.nodes) os << p.x() << " " << p.y() << "\n";
    for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open mesh file for writing: " + path);
    write_mesh(os, mesh);
}

}  // namespace droplet
