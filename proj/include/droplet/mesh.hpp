#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace droplet {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class BoundaryTag : std::uint8_t { Bottom = 0, Top = 1, Left = 2, Right = 3 };

const char* to_string(BoundaryTag tag);

struct BoundaryEdge {
    std::array<int, 2> v;  // vertex ids, ordered so the domain lies to the left
    BoundaryTag tag;
};

/// Triangulation of a rectangle. Triangles are counterclockwise; every
/// boundary edge belongs to exactly one triangle.
struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }

    double triangle_area(int t) const;
    double total_area() const;

    /// Throws std::runtime_error if a structural invariant is broken.
    void validate() const;
};

/// Uniform right-diagonal triangulation of (0,Lx) x (0,Ly) with nx-by-ny cells,
/// 2*nx*ny triangles. Nodes are numbered column by column (x outer, y inner).
Mesh build_rect_mesh(int nx, int ny, double lx, double ly);

/// Plain-text export: header "nodes N triangles T", then one node or triangle
/// record per line.
void write_mesh(std::ostream& os, const Mesh& mesh);
void write_mesh_file(const std::string& path, const Mesh& mesh);

}  // namespace droplet
