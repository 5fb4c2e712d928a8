#pragma once

#include <array>
#include <vector>

#include "droplet/mesh.hpp"

namespace droplet {

enum class SpaceKind { P1, P2, P2Vector };

inline bool is_vector(SpaceKind k) { return k == SpaceKind::P2Vector; }

/// Continuous Lagrange space on a triangulation. P2 spaces carry one dof per
/// vertex plus one per undirected edge; vector spaces interleave the two
/// components of each scalar dof (dof = 2*scalar + comp).
class FunctionSpace {
  public:
    FunctionSpace(const Mesh& mesh, SpaceKind kind);

    const Mesh& mesh() const { return *mesh_; }
    SpaceKind kind() const { return kind_; }
    int dof_count() const { return dof_count_; }
    int scalar_dof_count() const { return scalar_dof_count_; }
    int local_scalar_size() const { return kind_ == SpaceKind::P1 ? 3 : 6; }
    int local_size() const { return is_vector(kind_) ? 2 * local_scalar_size() : local_scalar_size(); }

    /// Scalar dofs of element t (3 for P1, 6 for P2: vertices then edge
    /// midpoints opposite the usual order v0v1, v1v2, v2v0).
    const int* element_scalar_dofs(int t) const { return element_dofs_.data() + t * local_scalar_size(); }

    /// Scalar dofs on a boundary edge: the two endpoints (P1) plus the edge
    /// midpoint dof (P2).
    std::array<int, 3> edge_scalar_dofs(const BoundaryEdge& be) const;

    /// Coordinates of every scalar dof (vertex or edge midpoint).
    const std::vector<Vec2>& dof_points() const { return dof_points_; }

  private:
    const Mesh* mesh_;
    SpaceKind kind_;
    int dof_count_ = 0;
    int scalar_dof_count_ = 0;
    std::vector<int> element_dofs_;
    std::vector<Vec2> dof_points_;
    std::vector<std::pair<std::pair<int, int>, int>> edge_dofs_;  // sorted vertex pair -> midpoint dof

    int edge_midpoint_dof(int a, int b) const;
};

/// Values of all scalar reference basis functions at a barycentric point.
struct BasisAtPoint {
    std::array<double, 6> value{};
    std::array<Vec2, 6> grad_ref{};  // d/d(l1), d/d(l2) in reference coordinates
    int size = 0;
};

BasisAtPoint eval_scalar_basis(SpaceKind kind, double l0, double l1, double l2);

/// 1D trace basis on an edge parametrized by t in [0,1]; 2 functions for P1
/// endpoints, 3 for P2 (two endpoints plus midpoint).
struct EdgeBasisAtPoint {
    std::array<double, 3> value{};
    int size = 0;
};

EdgeBasisAtPoint eval_edge_basis(SpaceKind kind, double t);

/// Affine map data of one triangle.
struct ElementGeometry {
    Vec2 x0;
    Mat2 jac;      // columns are edge vectors (x1-x0, x2-x0)
    Mat2 inv_t;    // inverse transpose, maps reference gradients to physical
    double det = 0.0;  // 2*area
};

ElementGeometry element_geometry(const Mesh& mesh, int t);

}  // namespace droplet
