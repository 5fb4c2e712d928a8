#include "droplet/assembly.hpp"

#include <stdexcept>

namespace droplet {

namespace detail {

void check_spaces(const FunctionSpace& a, const FunctionSpace& b) {
    if (&a.mesh() != &b.mesh()) throw std::invalid_argument("assembly: trial/test spaces live on different meshes");
}

}  // namespace detail

SparseMatrix assemble_mass(const FunctionSpace& space, int degree) {
    MatrixBuilder mb(space.dof_count(), space.dof_count());
    if (is_vector(space.kind())) {
        assemble_mat_vv(mb, 0, 0, space, space, degree, {}, {},
                        [](const PointCtx&, const ShapeV& u, const ShapeV& w) { return u.v.dot(w.v); });
    } else {
        assemble_mat_ss(mb, 0, 0, space, space, degree, {}, {},
                        [](const PointCtx&, const ShapeS& u, const ShapeS& w) { return u.v * w.v; });
    }
    return mb.compress();
}

SparseMatrix assemble_stiffness(const FunctionSpace& space, int degree) {
    MatrixBuilder mb(space.dof_count(), space.dof_count());
    if (is_vector(space.kind())) {
        assemble_mat_vv(mb, 0, 0, space, space, degree, {}, {},
                        [](const PointCtx&, const ShapeV& u, const ShapeV& w) {
                            return (u.g.array() * w.g.array()).sum();
                        });
    } else {
        assemble_mat_ss(mb, 0, 0, space, space, degree, {}, {},
                        [](const PointCtx&, const ShapeS& u, const ShapeS& w) { return u.g.dot(w.g); });
    }
    return mb.compress();
}

SparseMatrix assemble_boundary_mass(const FunctionSpace& space, BoundaryTag tag, int degree) {
    MatrixBuilder mb(space.dof_count(), space.dof_count());
    assemble_edge_mat_ss(mb, 0, 0, space, space, tag, degree, {},
                         [](const EdgePointCtx&, double u, double w) { return u * w; });
    return mb.compress();
}

SparseMatrix assemble_trilinear_a(const Field& u, const FunctionSpace& trial_v, const FunctionSpace& test_w,
                                  int degree) {
    if (!is_vector(u.space->kind())) throw std::invalid_argument("assemble_trilinear_a: u must be a vector field");
    MatrixBuilder mb(test_w.dof_count(), trial_v.dof_count());
    const Field* uf[] = {&u};
    assemble_mat_vv(mb, 0, 0, trial_v, test_w, degree, {}, uf,
                    [](const PointCtx& pc, const ShapeV& v, const ShapeV& w) {
                        return skew_transport(pc.vv[0], v, w);
                    });
    return mb.compress();
}

Field interpolate(const std::function<double(const Vec2&)>& f, const FunctionSpace& space) {
    if (is_vector(space.kind())) throw std::invalid_argument("interpolate: scalar space expected");
    Field out(space);
    const auto& pts = space.dof_points();
    for (int i = 0; i < space.dof_count(); ++i) {
        const double v = f(pts[i]);
        if (!std::isfinite(v)) throw std::invalid_argument("interpolate: function not finite at a dof point");
        out.coeffs[i] = v;
    }
    return out;
}

Field interpolate_vector(const std::function<Vec2(const Vec2&)>& f, const FunctionSpace& space) {
    if (!is_vector(space.kind())) throw std::invalid_argument("interpolate_vector: vector space expected");
    Field out(space);
    const auto& pts = space.dof_points();
    for (int i = 0; i < space.scalar_dof_count(); ++i) {
        const Vec2 v = f(pts[i]);
        out.coeffs[2 * i] = v.x();
        out.coeffs[2 * i + 1] = v.y();
    }
    return out;
}

double integrate(const Field& f, int degree) {
    double total = 0.0;
    const Mesh& mesh = f.space->mesh();
    const TriQuadRule& rule = tri_rule(degree);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const ElementGeometry geom = element_geometry(mesh, t);
        const int* dofs = f.space->element_scalar_dofs(t);
        for (const auto& p : rule.points) {
            const auto b = eval_scalar_basis(f.space->kind(), p.l0, p.l1, p.l2);
            double val = 0.0;
            for (int i = 0; i < b.size; ++i) val += f.coeffs[dofs[i]] * b.value[i];
            total += p.w * 0.5 * geom.det * val;
        }
    }
    return total;
}

double eval_scalar_field(const Field& f, int element, double l1, double l2) {
    const auto b = eval_scalar_basis(f.space->kind(), 1.0 - l1 - l2, l1, l2);
    const int* dofs = f.space->element_scalar_dofs(element);
    double val = 0.0;
    for (int i = 0; i < b.size; ++i) val += f.coeffs[dofs[i]] * b.value[i];
    return val;
}

}  // namespace droplet
