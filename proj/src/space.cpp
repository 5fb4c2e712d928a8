#include "droplet/space.hpp"

#include <algorithm>
#include <stdexcept>

namespace droplet {

FunctionSpace::FunctionSpace(const Mesh& mesh, SpaceKind kind) : mesh_(&mesh), kind_(kind) {
    const int nv = mesh.node_count();
    if (kind == SpaceKind::P1) {
        scalar_dof_count_ = nv;
        element_dofs_.reserve(static_cast<size_t>(mesh.triangle_count()) * 3);
        for (const auto& tri : mesh.triangles)
            for (int k = 0; k < 3; ++k) element_dofs_.push_back(tri[k]);
        dof_points_ = mesh.nodes;
    } else {
        // Collect undirected edges in deterministic (sorted) order.
        std::vector<std::pair<int, int>> edges;
        edges.reserve(static_cast<size_t>(mesh.triangle_count()) * 3);
        for (const auto& tri : mesh.triangles) {
            for (int k = 0; k < 3; ++k) {
                int a = tri[k], b = tri[(k + 1) % 3];
                if (a > b) std::swap(a, b);
                edges.emplace_back(a, b);
            }
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        edge_dofs_.reserve(edges.size());
        dof_points_ = mesh.nodes;
        for (size_t e = 0; e < edges.size(); ++e) {
            edge_dofs_.emplace_back(edges[e], nv + static_cast<int>(e));
            dof_points_.push_back(0.5 * (mesh.nodes[edges[e].first] + mesh.nodes[edges[e].second]));
        }
        scalar_dof_count_ = nv + static_cast<int>(edges.size());

        element_dofs_.reserve(static_cast<size_t>(mesh.triangle_count()) * 6);
        for (const auto& tri : mesh.triangles) {
            for (int k = 0; k < 3; ++k) element_dofs_.push_back(tri[k]);
            element_dofs_.push_back(edge_midpoint_dof(tri[0], tri[1]));
            element_dofs_.push_back(edge_midpoint_dof(tri[1], tri[2]));
            element_dofs_.push_back(edge_midpoint_dof(tri[2], tri[0]));
        }
    }
    dof_count_ = is_vector(kind) ? 2 * scalar_dof_count_ : scalar_dof_count_;
}

int FunctionSpace::edge_midpoint_dof(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(edge_dofs_.begin(), edge_dofs_.end(), std::make_pair(a, b),
                               [](const auto& entry, const auto& key) { return entry.first < key; });
    if (it == edge_dofs_.end() || it->first != std::make_pair(a, b))
        throw std::runtime_error("space: unknown edge");
    return it->second;
}

std::array<int, 3> FunctionSpace::edge_scalar_dofs(const BoundaryEdge& be) const {
    if (kind_ == SpaceKind::P1) return {be.v[0], be.v[1], -1};
    return {be.v[0], be.v[1], edge_midpoint_dof(be.v[0], be.v[1])};
}

BasisAtPoint eval_scalar_basis(SpaceKind kind, double l0, double l1, double l2) {
    BasisAtPoint b;
    // Reference gradients of the barycentric coordinates w.r.t. (l1, l2).
    const Vec2 g0(-1.0, -1.0), g1(1.0, 0.0), g2(0.0, 1.0);
    if (kind == SpaceKind::P1) {
        b.size = 3;
        b.value = {l0, l1, l2, 0, 0, 0};
        b.grad_ref = {g0, g1, g2, Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
        return b;
    }
    b.size = 6;
    b.value = {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
               4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0};
    b.grad_ref = {(4 * l0 - 1) * g0, (4 * l1 - 1) * g1, (4 * l2 - 1) * g2,
                  4.0 * (l1 * g0 + l0 * g1), 4.0 * (l2 * g1 + l1 * g2), 4.0 * (l0 * g2 + l2 * g0)};
    return b;
}

EdgeBasisAtPoint eval_edge_basis(SpaceKind kind, double t) {
    EdgeBasisAtPoint b;
    if (kind == SpaceKind::P1) {
        b.size = 2;
        b.value = {1.0 - t, t, 0.0};
        return b;
    }
    b.size = 3;
    b.value = {(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)};
    return b;
}

ElementGeometry element_geometry(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles[t];
    ElementGeometry g;
    g.x0 = mesh.nodes[tri[0]];
    g.jac.col(0) = mesh.nodes[tri[1]] - g.x0;
    g.jac.col(1) = mesh.nodes[tri[2]] - g.x0;
    g.det = g.jac(0, 0) * g.jac(1, 1) - g.jac(0, 1) * g.jac(1, 0);
    Mat2 inv;
    inv << g.jac(1, 1), -g.jac(0, 1), -g.jac(1, 0), g.jac(0, 0);
    inv /= g.det;
    g.inv_t = inv.transpose();
    return g;
}

}  // namespace droplet
