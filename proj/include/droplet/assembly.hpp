#pragma once

#include <array>
#include <functional>
#include <span>

#include "droplet/field.hpp"
#include "droplet/quadrature.hpp"
#include "droplet/sparse.hpp"
#include "droplet/space.hpp"

namespace droplet {

/// Scalar shape function at a quadrature point (value and physical gradient).
struct ShapeS {
    double v;
    Vec2 g;
};

/// Vector shape function; g(r,c) = d(component r)/d(x_c).
struct ShapeV {
    Vec2 v;
    Mat2 g;
};

inline Mat2 sym_grad(const Mat2& g) { return 0.5 * (g + g.transpose()); }

/// Skew-symmetrized transport kernel: the integrand of
///   a(u,v,w) = 1/2 ((u.grad)v, w) - 1/2 ((u.grad)w, v)
/// evaluated for one (v,w) shape pair and a given transporting velocity u.
inline double skew_transport(const Vec2& u, const ShapeV& v, const ShapeV& w) {
    return 0.5 * ((v.g * u).dot(w.v) - (w.g * u).dot(v.v));
}

/// Same kernel when v is a known field with value/jacobian at the point.
inline double skew_transport(const Vec2& u, const Vec2& v_val, const Mat2& v_jac, const ShapeV& w) {
    return 0.5 * ((v_jac * u).dot(w.v) - (w.g * u).dot(v_val));
}

/// Evaluated coefficient fields at one quadrature point, in the order the
/// fields were passed to the assembler.
struct PointCtx {
    Vec2 x;
    std::array<double, 4> s{};   // scalar field values
    std::array<Vec2, 4> sg{};    // scalar field gradients
    std::array<Vec2, 3> vv{};    // vector field values
    std::array<Mat2, 3> vj{};    // vector field jacobians
};

using ScalarFields = std::span<const Field* const>;
using VectorFields = std::span<const Field* const>;

namespace detail {

struct ElementData {
    ElementGeometry geom;
    const TriQuadRule* rule;
    std::array<BasisAtPoint, 12> basis_trial;  // per quadrature point
    std::array<BasisAtPoint, 12> basis_test;
};

void check_spaces(const FunctionSpace& a, const FunctionSpace& b);

template <class F>
void for_each_element_qp(const FunctionSpace& trial, const FunctionSpace& test, int degree,
                         ScalarFields sf, VectorFields vf, F&& body) {
    check_spaces(trial, test);
    const Mesh& mesh = trial.mesh();
    const TriQuadRule& rule = tri_rule(degree);
    const int nq = static_cast<int>(rule.points.size());

    std::vector<BasisAtPoint> bt(nq), bw(nq), bs(nq), bv(nq);
    for (int q = 0; q < nq; ++q) {
        const auto& p = rule.points[q];
        bt[q] = eval_scalar_basis(trial.kind() == SpaceKind::P2Vector ? SpaceKind::P2 : trial.kind(), p.l0, p.l1, p.l2);
        bw[q] = eval_scalar_basis(test.kind() == SpaceKind::P2Vector ? SpaceKind::P2 : test.kind(), p.l0, p.l1, p.l2);
        if (!sf.empty() || !vf.empty()) {
            bs[q] = eval_scalar_basis(SpaceKind::P1, p.l0, p.l1, p.l2);
            bv[q] = eval_scalar_basis(SpaceKind::P2, p.l0, p.l1, p.l2);
        }
    }

    PointCtx pc;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const ElementGeometry geom = element_geometry(mesh, t);
        for (int q = 0; q < nq; ++q) {
            const auto& p = rule.points[q];
            pc.x = geom.x0 + geom.jac * Vec2(p.l1, p.l2);
            for (size_t k = 0; k < sf.size(); ++k) {
                const Field& f = *sf[k];
                const auto& fb = f.space->kind() == SpaceKind::P1 ? bs[q] : bv[q];
                const int* dofs = f.space->element_scalar_dofs(t);
                double val = 0.0;
                Vec2 grad = Vec2::Zero();
                for (int i = 0; i < fb.size; ++i) {
                    const double c = f.coeffs[dofs[i]];
                    val += c * fb.value[i];
                    grad += c * (geom.inv_t * fb.grad_ref[i]);
                }
                pc.s[k] = val;
                pc.sg[k] = grad;
            }
            for (size_t k = 0; k < vf.size(); ++k) {
                const Field& f = *vf[k];
                const auto& fb = bv[q];
                const int* dofs = f.space->element_scalar_dofs(t);
                Vec2 val = Vec2::Zero();
                Mat2 jac = Mat2::Zero();
                for (int i = 0; i < fb.size; ++i) {
                    const Vec2 c(f.coeffs[2 * dofs[i]], f.coeffs[2 * dofs[i] + 1]);
                    val += c * fb.value[i];
                    jac += c * (geom.inv_t * fb.grad_ref[i]).transpose();
                }
                pc.vv[k] = val;
                pc.vj[k] = jac;
            }
            const double wdet = rule.points[q].w * 0.5 * geom.det;
            body(t, geom, pc, bt[q], bw[q], wdet);
        }
    }
}

inline ShapeS scalar_shape(const ElementGeometry& geom, const BasisAtPoint& b, int i) {
    return {b.value[i], geom.inv_t * b.grad_ref[i]};
}

inline ShapeV vector_shape(const ElementGeometry& geom, const BasisAtPoint& b, int i) {
    ShapeV s;
    const int node = i / 2, comp = i % 2;
    const Vec2 g = geom.inv_t * b.grad_ref[node];
    s.v = Vec2::Zero();
    s.v[comp] = b.value[node];
    s.g = Mat2::Zero();
    s.g.row(comp) = g.transpose();
    return s;
}

}  // namespace detail

// Bilinear-form assemblers. The kernel is evaluated pointwise on the weak-form
// integrand: kernel(ctx, trial_shape, test_shape). Results accumulate into the
// builder at the given dof offsets.

template <class Kernel>
void assemble_mat_ss(MatrixBuilder& out, int row_off, int col_off, const FunctionSpace& trial,
                     const FunctionSpace& test, int degree, ScalarFields sf, VectorFields vf, Kernel&& kernel) {
    detail::for_each_element_qp(trial, test, degree, sf, vf,
        [&](int t, const ElementGeometry& geom, const PointCtx& pc, const BasisAtPoint& bt,
            const BasisAtPoint& bw, double wdet) {
            const int* td = trial.element_scalar_dofs(t);
            const int* wd = test.element_scalar_dofs(t);
            std::array<ShapeS, 6> us, ws;
            for (int j = 0; j < bt.size; ++j) us[j] = detail::scalar_shape(geom, bt, j);
            for (int i = 0; i < bw.size; ++i) ws[i] = detail::scalar_shape(geom, bw, i);
            for (int i = 0; i < bw.size; ++i)
                for (int j = 0; j < bt.size; ++j)
                    out.add(row_off + wd[i], col_off + td[j], wdet * kernel(pc, us[j], ws[i]));
        });
}

template <class Kernel>
void assemble_mat_vv(MatrixBuilder& out, int row_off, int col_off, const FunctionSpace& trial,
                     const FunctionSpace& test, int degree, ScalarFields sf, VectorFields vf, Kernel&& kernel) {
    detail::for_each_element_qp(trial, test, degree, sf, vf,
        [&](int t, const ElementGeometry& geom, const PointCtx& pc, const BasisAtPoint& bt,
            const BasisAtPoint& bw, double wdet) {
            const int* td = trial.element_scalar_dofs(t);
            const int* wd = test.element_scalar_dofs(t);
            std::array<ShapeV, 12> us, ws;
            for (int j = 0; j < 2 * bt.size; ++j) us[j] = detail::vector_shape(geom, bt, j);
            for (int i = 0; i < 2 * bw.size; ++i) ws[i] = detail::vector_shape(geom, bw, i);
            for (int i = 0; i < 2 * bw.size; ++i) {
                const int gi = 2 * wd[i / 2] + i % 2;
                for (int j = 0; j < 2 * bt.size; ++j)
                    out.add(row_off + gi, col_off + 2 * td[j / 2] + j % 2, wdet * kernel(pc, us[j], ws[i]));
            }
        });
}

/// Scalar trial against vector test (e.g. pressure or phase entering momentum).
template <class Kernel>
void assemble_mat_sv(MatrixBuilder& out, int row_off, int col_off, const FunctionSpace& trial,
                     const FunctionSpace& test, int degree, ScalarFields sf, VectorFields vf, Kernel&& kernel) {
    detail::for_each_element_qp(trial, test, degree, sf, vf,
        [&](int t, const ElementGeometry& geom, const PointCtx& pc, const BasisAtPoint& bt,
            const BasisAtPoint& bw, double wdet) {
            const int* td = trial.element_scalar_dofs(t);
            const int* wd = test.element_scalar_dofs(t);
            std::array<ShapeS, 6> us;
            std::array<ShapeV, 12> ws;
            for (int j = 0; j < bt.size; ++j) us[j] = detail::scalar_shape(geom, bt, j);
            for (int i = 0; i < 2 * bw.size; ++i) ws[i] = detail::vector_shape(geom, bw, i);
            for (int i = 0; i < 2 * bw.size; ++i) {
                const int gi = 2 * wd[i / 2] + i % 2;
                for (int j = 0; j < bt.size; ++j)
                    out.add(row_off + gi, col_off + td[j], wdet * kernel(pc, us[j], ws[i]));
            }
        });
}

/// Vector trial against scalar test (e.g. velocity entering transport rows).
template <class Kernel>
void assemble_mat_vs(MatrixBuilder& out, int row_off, int col_off, const FunctionSpace& trial,
                     const FunctionSpace& test, int degree, ScalarFields sf, VectorFields vf, Kernel&& kernel) {
    detail::for_each_element_qp(trial, test, degree, sf, vf,
        [&](int t, const ElementGeometry& geom, const PointCtx& pc, const BasisAtPoint& bt,
            const BasisAtPoint& bw, double wdet) {
            const int* td = trial.element_scalar_dofs(t);
            const int* wd = test.element_scalar_dofs(t);
            std::array<ShapeV, 12> us;
            std::array<ShapeS, 6> ws;
            for (int j = 0; j < 2 * bt.size; ++j) us[j] = detail::vector_shape(geom, bt, j);
            for (int i = 0; i < bw.size; ++i) ws[i] = detail::scalar_shape(geom, bw, i);
            for (int i = 0; i < bw.size; ++i)
                for (int j = 0; j < 2 * bt.size; ++j)
                    out.add(row_off + wd[i], col_off + 2 * td[j / 2] + j % 2, wdet * kernel(pc, us[j], ws[i]));
        });
}

// Linear-form assemblers (test function only).

template <class Kernel>
void assemble_rhs_s(Vector& out, int off, const FunctionSpace& test, int degree, ScalarFields sf,
                    VectorFields vf, Kernel&& kernel) {
    detail::for_each_element_qp(test, test, degree, sf, vf,
        [&](int t, const ElementGeometry& geom, const PointCtx& pc, const BasisAtPoint&,
            const BasisAtPoint& bw, double wdet) {
            const int* wd = test.element_scalar_dofs(t);
            for (int i = 0; i < bw.size; ++i)
                out[off + wd[i]] += wdet * kernel(pc, detail::scalar_shape(geom, bw, i));
        });
}

template <class Kernel>
void assemble_rhs_v(Vector& out, int off, const FunctionSpace& test, int degree, ScalarFields sf,
                    VectorFields vf, Kernel&& kernel) {
    detail::for_each_element_qp(test, test, degree, sf, vf,
        [&](int t, const ElementGeometry& geom, const PointCtx& pc, const BasisAtPoint&,
            const BasisAtPoint& bw, double wdet) {
            const int* wd = test.element_scalar_dofs(t);
            for (int i = 0; i < 2 * bw.size; ++i)
                out[off + 2 * wd[i / 2] + i % 2] += wdet * kernel(pc, detail::vector_shape(geom, bw, i));
        });
}

// Boundary (trace) assembly over the edges of one tag. Boundary kernels see
// shape values only; coefficient fields are evaluated through their traces.

struct EdgePointCtx {
    Vec2 x;
    std::array<double, 2> s{};
};

template <class Kernel>
void assemble_edge_mat_ss(MatrixBuilder& out, int row_off, int col_off, const FunctionSpace& trial,
                          const FunctionSpace& test, BoundaryTag tag, int degree, ScalarFields sf,
                          Kernel&& kernel) {
    detail::check_spaces(trial, test);
    const Mesh& mesh = trial.mesh();
    const EdgeQuadRule& rule = edge_rule(degree);
    for (const auto& be : mesh.boundary_edges) {
        if (be.tag != tag) continue;
        const Vec2 a = mesh.nodes[be.v[0]], b = mesh.nodes[be.v[1]];
        const double len = (b - a).norm();
        const auto tdofs = trial.edge_scalar_dofs(be);
        const auto wdofs = test.edge_scalar_dofs(be);
        const int nt = trial.kind() == SpaceKind::P1 ? 2 : 3;
        const int nw = test.kind() == SpaceKind::P1 ? 2 : 3;
        for (const auto& qp : rule.points) {
            EdgePointCtx pc;
            pc.x = (1.0 - qp.t) * a + qp.t * b;
            for (size_t k = 0; k < sf.size(); ++k) {
                const Field& f = *sf[k];
                const auto fdofs = f.space->edge_scalar_dofs(be);
                const auto fb = eval_edge_basis(f.space->kind(), qp.t);
                double val = 0.0;
                for (int i = 0; i < fb.size; ++i) val += f.coeffs[fdofs[i]] * fb.value[i];
                pc.s[k] = val;
            }
            const auto bt = eval_edge_basis(trial.kind(), qp.t);
            const auto bw = eval_edge_basis(test.kind(), qp.t);
            const double w = qp.w * len;
            for (int i = 0; i < nw; ++i)
                for (int j = 0; j < nt; ++j)
                    out.add(row_off + wdofs[i], col_off + tdofs[j], w * kernel(pc, bt.value[j], bw.value[i]));
        }
    }
}

template <class Kernel>
void assemble_edge_rhs_s(Vector& out, int off, const FunctionSpace& test, BoundaryTag tag, int degree,
                         ScalarFields sf, Kernel&& kernel) {
    const Mesh& mesh = test.mesh();
    const EdgeQuadRule& rule = edge_rule(degree);
    for (const auto& be : mesh.boundary_edges) {
        if (be.tag != tag) continue;
        const Vec2 a = mesh.nodes[be.v[0]], b = mesh.nodes[be.v[1]];
        const double len = (b - a).norm();
        const auto wdofs = test.edge_scalar_dofs(be);
        const int nw = test.kind() == SpaceKind::P1 ? 2 : 3;
        for (const auto& qp : rule.points) {
            EdgePointCtx pc;
            pc.x = (1.0 - qp.t) * a + qp.t * b;
            for (size_t k = 0; k < sf.size(); ++k) {
                const Field& f = *sf[k];
                const auto fdofs = f.space->edge_scalar_dofs(be);
                const auto fb = eval_edge_basis(f.space->kind(), qp.t);
                double val = 0.0;
                for (int i = 0; i < fb.size; ++i) val += f.coeffs[fdofs[i]] * fb.value[i];
                pc.s[k] = val;
            }
            const auto bw = eval_edge_basis(test.kind(), qp.t);
            const double w = qp.w * len;
            for (int i = 0; i < nw; ++i) out[off + wdofs[i]] += w * kernel(pc, bw.value[i]);
        }
    }
}

// Named forms used across the solvers and their tests.

SparseMatrix assemble_mass(const FunctionSpace& space, int degree = kQuadDefault);
SparseMatrix assemble_stiffness(const FunctionSpace& space, int degree = kQuadDefault);
SparseMatrix assemble_boundary_mass(const FunctionSpace& space, BoundaryTag tag, int degree = kEdgeQuadDefault);

/// Matrix A(u) of the skew transport form, w^T A(u) v = a(u,v,w).
SparseMatrix assemble_trilinear_a(const Field& u, const FunctionSpace& trial_v, const FunctionSpace& test_w,
                                  int degree = kQuadDefault);

/// Nodal interpolation of a pointwise function.
Field interpolate(const std::function<double(const Vec2&)>& f, const FunctionSpace& space);
Field interpolate_vector(const std::function<Vec2(const Vec2&)>& f, const FunctionSpace& space);

/// Integral of a scalar field over the domain.
double integrate(const Field& f, int degree = kQuadDefault);

/// Pointwise evaluation helpers used by diagnostics and oracles.
double eval_scalar_field(const Field& f, int element, double l1, double l2);

}  // namespace droplet
