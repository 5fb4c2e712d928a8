#include "droplet/forward.hpp"

#include <cmath>
#include <stdexcept>

namespace droplet {

VelocityBc VelocityBcTable::for_tag(BoundaryTag tag) const {
    switch (tag) {
        case BoundaryTag::Bottom: return bottom;
        case BoundaryTag::Top: return top;
        case BoundaryTag::Left: return left;
        case BoundaryTag::Right: return right;
    }
    return VelocityBc::None;
}

int Model::steps() const {
    return static_cast<int>(std::lround(params.t_end / params.tau));
}

double Model::l2_norm(const Vector& c) const { return std::sqrt(c.dot(mass_p1 * c)); }

Model make_model(Mesh mesh, const PhysicalParams& params, const ControlGrid& grid,
                 const VelocityBcTable& bcs) {
    params.validate();
    mesh.validate();
    const double m_real = params.t_end / params.tau;
    if (std::abs(m_real - std::lround(m_real)) > 1e-9 * std::max(1.0, m_real))
        throw std::invalid_argument("make_model: tau must divide T");

    Model model;
    model.mesh = std::make_shared<Mesh>(std::move(mesh));
    model.p1 = std::make_shared<FunctionSpace>(*model.mesh, SpaceKind::P1);
    model.p2v = std::make_shared<FunctionSpace>(*model.mesh, SpaceKind::P2Vector);
    model.params = params;
    model.grid = grid;
    model.box.cos_theta_eq = params.cos_theta_eq;
    model.bcs = bcs;
    model.gravity = gravity_vector(params);
    model.bottom_segs = bottom_subsegments(*model.mesh, grid);
    model.mass_p1 = assemble_mass(*model.p1);

    // Velocity constraints: no-slip pins both components, slip pins the
    // normal component of the (axis-aligned) wall.
    model.ns_constrained.assign(static_cast<size_t>(model.ns_dim()), false);
    for (const auto& be : model.mesh->boundary_edges) {
        const VelocityBc bc = bcs.for_tag(be.tag);
        if (bc == VelocityBc::None) continue;
        const bool horizontal = be.tag == BoundaryTag::Bottom || be.tag == BoundaryTag::Top;
        const auto dofs = model.p2v->edge_scalar_dofs(be);
        for (int k = 0; k < 3; ++k) {
            if (bc == VelocityBc::NoSlip) {
                model.ns_constrained[2 * dofs[k]] = true;
                model.ns_constrained[2 * dofs[k] + 1] = true;
            } else {
                model.ns_constrained[2 * dofs[k] + (horizontal ? 1 : 0)] = true;
            }
        }
    }
    // Pin the pressure nullspace; the field is shifted to zero mean afterwards.
    model.ns_constrained[model.nv()] = true;
    return model;
}

void for_each_bottom_qp(const Model& model, int degree,
                        const std::function<void(const BottomSubsegment&, const Vec2&, double,
                                                 const std::array<int, 2>&, const std::array<double, 2>&)>& f) {
    const Mesh& mesh = *model.mesh;
    const EdgeQuadRule& rule = edge_rule(degree);
    for (const auto& seg : model.bottom_segs) {
        const auto& be = mesh.boundary_edges[seg.edge_index];
        const Vec2 a = mesh.nodes[be.v[0]], b = mesh.nodes[be.v[1]];
        const double seg_len = (b - a).norm() * (seg.t1 - seg.t0);
        const std::array<int, 2> dofs{be.v[0], be.v[1]};
        for (const auto& qp : rule.points) {
            const double t = seg.t0 + qp.t * (seg.t1 - seg.t0);
            const Vec2 x = (1.0 - t) * a + t * b;
            f(seg, x, qp.w * seg_len, dofs, {1.0 - t, t});
        }
    }
}

SparseMatrix assemble_ch_jacobian(const Model& model, const Field& phi_wpp, const Field& phi_prev) {
    const PhysicalParams& p = model.params;
    const FunctionSpace& p1 = *model.p1;
    const int np = model.np();
    const double tau = p.tau;
    MatrixBuilder mb(2 * np, 2 * np);

    // CH1 row: mass in phi, mobility + stabilization in mu.
    assemble_mat_ss(mb, 0, 0, p1, p1, kQuadDefault, {}, {},
                    [](const PointCtx&, const ShapeS& u, const ShapeS& w) { return u.v * w.v; });
    {
        const Field* sf[] = {&phi_prev};
        assemble_mat_ss(mb, 0, np, p1, p1, kQuadDefault, sf, {},
                        [&p, tau](const PointCtx& pc, const ShapeS& u, const ShapeS& w) {
                            const double stab = tau * tau / p.rho_min * pc.s[0] * pc.s[0];
                            return (stab + tau * p.mobility) * u.g.dot(w.g);
                        });
    }

    // CH2 row: interfacial stiffness + convex part of the well in phi.
    {
        const Field* sf[] = {&phi_wpp};
        assemble_mat_ss(mb, np, 0, p1, p1, kQuadNonlinear, sf, {},
                        [&p, tau](const PointCtx& pc, const ShapeS& u, const ShapeS& w) {
                            return tau * p.sigma * p.eps * u.g.dot(w.g) +
                                   tau * p.sigma / p.eps * eval_well(pc.s[0]).wp_pp * u.v * w.v;
                        });
    }
    const double wall = p.r_relax + tau * p.s_gamma / 2.0;
    assemble_edge_mat_ss(mb, np, 0, p1, p1, BoundaryTag::Bottom, kEdgeQuadDefault, {},
                         [wall](const EdgePointCtx&, double u, double w) { return wall * u * w; });
    assemble_mat_ss(mb, np, np, p1, p1, kQuadDefault, {}, {},
                    [tau](const PointCtx&, const ShapeS& u, const ShapeS& w) { return -tau * u.v * w.v; });
    return mb.compress();
}

Vector ch_residual(const Model& model, const Field& phi, const Field& mu, const Field& phi_prev,
                   const Field& v_prev, std::span<const double> bu) {
    const PhysicalParams& p = model.params;
    const FunctionSpace& p1 = *model.p1;
    const int np = model.np();
    const double tau = p.tau;
    Vector r = Vector::Zero(2 * np);

    const Field* sf[] = {&phi, &phi_prev, &mu};
    const Field* vf[] = {&v_prev};
    assemble_rhs_s(r, 0, p1, kQuadNonlinear, sf, vf, [&p, tau](const PointCtx& pc, const ShapeS& w) {
        const double stab = tau * tau / p.rho_min * pc.s[1] * pc.s[1];
        return (pc.s[0] - pc.s[1]) * w.v - tau * pc.s[1] * pc.vv[0].dot(w.g) +
               (stab + tau * p.mobility) * pc.sg[2].dot(w.g);
    });
    assemble_rhs_s(r, np, p1, kQuadNonlinear, sf, vf, [&p, tau](const PointCtx& pc, const ShapeS& w) {
        const auto well = eval_well(pc.s[0]);
        const auto well_prev = eval_well(pc.s[1]);
        return tau * p.sigma * p.eps * pc.sg[0].dot(w.g) +
               tau * p.sigma / p.eps * (well.wp_p + well_prev.wm_p) * w.v - tau * pc.s[2] * w.v;
    });

    // Wall terms: implicit relaxation and stabilization plus the lagged
    // control-dependent contact energy on each patch.
    const double wall = p.r_relax + tau * p.s_gamma / 2.0;
    const Field* tr[] = {&phi, &phi_prev};
    assemble_edge_rhs_s(r, np, p1, BoundaryTag::Bottom, kEdgeQuadDefault, tr,
                        [wall](const EdgePointCtx& pc, double w) { return wall * (pc.s[0] - pc.s[1]) * w; });
    for_each_bottom_qp(model, kEdgeQuadNonlinear,
                       [&](const BottomSubsegment& seg, const Vec2&, double w, const std::array<int, 2>& dofs,
                           const std::array<double, 2>& sh) {
                           const double bu_val = seg.patch >= 0 ? bu[seg.patch] : 0.0;
                           const double phi_val =
                               phi_prev.coeffs[dofs[0]] * sh[0] + phi_prev.coeffs[dofs[1]] * sh[1];
                           const double gp = tau * gamma_wall_prime(p, phi_val, bu_val);
                           r[np + dofs[0]] += w * gp * sh[0];
                           r[np + dofs[1]] += w * gp * sh[1];
                       });
    return r;
}

SparseMatrix assemble_ns_system(const Model& model, const Field& phi, const Field& phi_prev,
                                const Field& mu, const Field& v_prev) {
    const PhysicalParams& p = model.params;
    const double tau = p.tau;
    const int nv = model.nv();
    MatrixBuilder mb(model.ns_dim(), model.ns_dim());

    // Momentum block: averaged-density mass, skew transport by the lagged
    // momentum plus the diffusive flux J, and the viscous term.
    {
        const Field* sf[] = {&phi, &phi_prev, &mu};
        const Field* vf[] = {&v_prev};
        assemble_mat_vv(mb, 0, 0, *model.p2v, *model.p2v, kQuadNonlinear, sf, vf,
                        [&p, tau](const PointCtx& pc, const ShapeV& u, const ShapeV& w) {
                            const double rho_bar = 0.5 * (eval_rho(p, pc.s[0]) + eval_rho(p, pc.s[1]));
                            const Vec2 transport =
                                eval_rho(p, pc.s[1]) * pc.vv[0] - p.mobility * eval_rho_prime(p, pc.s[0]) * pc.sg[2];
                            const double visc = 2.0 * eval_eta(p, pc.s[0]) *
                                                (sym_grad(u.g).array() * sym_grad(w.g).array()).sum();
                            return rho_bar * u.v.dot(w.v) + tau * skew_transport(transport, u, w) + tau * visc;
                        });
    }

    // Pressure coupling and its transpose (incompressibility rows).
    MatrixBuilder g(model.ns_dim(), model.ns_dim());
    assemble_mat_sv(g, 0, nv, *model.p1, *model.p2v, kQuadDefault, {}, {},
                    [tau](const PointCtx&, const ShapeS& q, const ShapeV& w) {
                        return -tau * q.v * w.g.trace();
                    });
    mb.add_block(g, 0, 0);
    mb.add_block_transposed(g, 0, 0);

    return mb.compress(model.ns_constrained);
}

Vector assemble_ns_rhs(const Model& model, const Field& phi, const Field& phi_prev, const Field& mu,
                       const Field& v_prev) {
    const PhysicalParams& p = model.params;
    const double tau = p.tau;
    Vector rhs = Vector::Zero(model.ns_dim());
    const Field* sf[] = {&phi, &phi_prev, &mu};
    const Field* vf[] = {&v_prev};
    const Vec2 gravity = model.gravity;
    assemble_rhs_v(rhs, 0, *model.p2v, kQuadNonlinear, sf, vf,
                   [&p, tau, gravity](const PointCtx& pc, const ShapeV& w) {
                       return eval_rho(p, pc.s[1]) * pc.vv[0].dot(w.v) +
                              tau * eval_rho(p, pc.s[0]) * gravity.dot(w.v) -
                              tau * pc.s[1] * pc.sg[2].dot(w.v);
                   });
    for (int i = 0; i < model.ns_dim(); ++i)
        if (model.ns_constrained[i]) rhs[i] = 0.0;
    return rhs;
}

ChResult ch_step(const Model& model, const Field& phi_prev, const Field& mu_prev, const Field& v_prev,
                 std::span<const double> bu, SolverWorkspace& ws, const NewtonOptions& opts) {
    const int np = model.np();
    if (static_cast<int>(bu.size()) != model.grid.s_patches)
        throw std::invalid_argument("ch_step: one control value per patch expected");
    for (double b : bu)
        if (std::abs(model.params.cos_theta_eq + b) > 1.0 + 1e-12)
            throw std::invalid_argument("ch_step: |cos(theta_eq) + Bu| must not exceed 1");

    ChResult out{phi_prev, mu_prev, {}};
    Vector residual = ch_residual(model, out.phi, out.mu, phi_prev, v_prev, bu);
    double rnorm = residual.norm();
    out.report.residuals.push_back(rnorm);
    const double tol = opts.rtol * rnorm + opts.atol;

    for (int it = 0; it < opts.max_iter; ++it) {
        if (!std::isfinite(rnorm)) throw NewtonDivergedError("ch_step: non-finite residual");
        if (rnorm <= tol) {
            out.report.converged = true;
            out.report.iterations = it;
            return out;
        }
        const SparseMatrix jac = assemble_ch_jacobian(model, out.phi, phi_prev);
        ws.ch.factorize(jac);
        const Vector delta = ws.ch.solve(-residual);

        // Damped update: halve on residual increase.
        double lambda = 1.0;
        Field phi_try = out.phi, mu_try = out.mu;
        Vector res_try;
        double rnorm_try = 0.0;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            phi_try.coeffs = out.phi.coeffs + lambda * delta.head(np);
            mu_try.coeffs = out.mu.coeffs + lambda * delta.tail(np);
            res_try = ch_residual(model, phi_try, mu_try, phi_prev, v_prev, bu);
            rnorm_try = res_try.norm();
            if (std::isfinite(rnorm_try) && rnorm_try < rnorm) break;
            if (h < opts.max_halvings) lambda *= 0.5;
        }
        out.phi = phi_try;
        out.mu = mu_try;
        residual = std::move(res_try);
        rnorm = rnorm_try;
        out.report.residuals.push_back(rnorm);
    }
    if (rnorm <= tol) {
        out.report.converged = true;
        out.report.iterations = opts.max_iter;
        return out;
    }
    throw NewtonDivergedError("ch_step: Newton did not converge within " + std::to_string(opts.max_iter) +
                              " iterations (residual " + std::to_string(rnorm) + ")");
}

NsResult ns_step(const Model& model, const Field& phi, const Field& phi_prev, const Field& mu,
                 const Field& v_prev, SolverWorkspace& ws) {
    const SparseMatrix sys = assemble_ns_system(model, phi, phi_prev, mu, v_prev);
    const Vector rhs = assemble_ns_rhs(model, phi, phi_prev, mu, v_prev);
    ws.ns.factorize(sys);
    const Vector sol = ws.ns.solve(rhs);

    NsResult out{Field(*model.p2v), Field(*model.p1)};
    out.v.coeffs = sol.head(model.nv());
    out.p.coeffs = sol.tail(model.np());
    const double area = model.mesh->total_area();
    out.p.coeffs.array() -= integrate(out.p) / area;
    return out;
}

State step(const Model& model, const State& prev, const ControlVector& u, int m, SolverWorkspace& ws,
           NewtonReport* report, const NewtonOptions& opts) {
    const auto bu = bu_for_step(u, m, model.params.tau);
    ChResult ch = ch_step(model, prev.phi, prev.mu, prev.v, bu, ws, opts);
    if (report) *report = ch.report;
    NsResult ns = ns_step(model, ch.phi, prev.phi, ch.mu, prev.v, ws);
    return State{std::move(ns.v), std::move(ns.p), std::move(ch.phi), std::move(ch.mu),
                 m * model.params.tau};
}

State initial_state(const Model& model, const Field& phi0, const Field& v0) {
    if (phi0.space != model.p1.get() || v0.space != model.p2v.get())
        throw std::invalid_argument("initial_state: fields must live on the model spaces");
    return State{v0, Field(*model.p1), phi0, Field(*model.p1), 0.0};
}

Trajectory simulate(const Model& model, const Field& phi0, const Field& v0, const ControlVector& u,
                    const NewtonOptions& opts) {
    Trajectory traj;
    traj.states.push_back(initial_state(model, phi0, v0));
    SolverWorkspace ws;
    const int m_steps = model.steps();
    for (int m = 1; m <= m_steps; ++m) {
        traj.bu.push_back(bu_for_step(u, m, model.params.tau));
        NewtonReport report;
        try {
            traj.states.push_back(step(model, traj.states.back(), u, m, ws, &report, opts));
        } catch (const std::exception& e) {
            throw std::runtime_error("simulate: step " + std::to_string(m) + " failed: " + e.what());
        }
        traj.newton.push_back(std::move(report));
    }
    return traj;
}

double mass(const Field& phi) { return integrate(phi); }

namespace {

struct StateEnergy {
    double kinetic;
    double gl_bulk;
};

StateEnergy bulk_energy(const Model& model, const State& s) {
    const PhysicalParams& p = model.params;
    StateEnergy e{0.0, 0.0};
    const Mesh& mesh = *model.mesh;
    const TriQuadRule& rule = tri_rule(kQuadNonlinear);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const ElementGeometry geom = element_geometry(mesh, t);
        const int* pdofs = model.p1->element_scalar_dofs(t);
        const int* vdofs = model.p2v->element_scalar_dofs(t);
        for (const auto& qp : rule.points) {
            const auto pb = eval_scalar_basis(SpaceKind::P1, qp.l0, qp.l1, qp.l2);
            const auto vb = eval_scalar_basis(SpaceKind::P2, qp.l0, qp.l1, qp.l2);
            double phi = 0.0;
            Vec2 gphi = Vec2::Zero();
            for (int i = 0; i < 3; ++i) {
                phi += s.phi.coeffs[pdofs[i]] * pb.value[i];
                gphi += s.phi.coeffs[pdofs[i]] * (geom.inv_t * pb.grad_ref[i]);
            }
            Vec2 v = Vec2::Zero();
            for (int i = 0; i < 6; ++i) {
                const Vec2 c(s.v.coeffs[2 * vdofs[i]], s.v.coeffs[2 * vdofs[i] + 1]);
                v += c * vb.value[i];
            }
            const double w = qp.w * 0.5 * geom.det;
            e.kinetic += w * 0.5 * eval_rho(p, phi) * v.squaredNorm();
            e.gl_bulk += w * p.sigma * (0.5 * p.eps * gphi.squaredNorm() + eval_well(phi).w / p.eps);
        }
    }
    return e;
}

double wall_energy(const Model& model, const Field& phi, std::span<const double> bu) {
    double total = 0.0;
    for_each_bottom_qp(model, kEdgeQuadNonlinear,
                       [&](const BottomSubsegment& seg, const Vec2&, double w, const std::array<int, 2>& dofs,
                           const std::array<double, 2>& sh) {
                           const double bu_val = seg.patch >= 0 ? bu[seg.patch] : 0.0;
                           const double val = phi.coeffs[dofs[0]] * sh[0] + phi.coeffs[dofs[1]] * sh[1];
                           total += w * gamma_wall(model.params, val, bu_val);
                       });
    return total;
}

}  // namespace

EnergyReport energy_report(const Model& model, const Trajectory& traj) {
    const PhysicalParams& p = model.params;
    const double tau = p.tau;
    EnergyReport report;
    for (int m = 1; m <= traj.step_count(); ++m) {
        const State& prev = traj.states[m - 1];
        const State& cur = traj.states[m];
        const auto& bu = traj.bu[m - 1];
        EnergyRow row;
        row.m = m;
        row.time = cur.t;

        const StateEnergy e_cur = bulk_energy(model, cur);
        const StateEnergy e_prev = bulk_energy(model, prev);
        row.kinetic = e_cur.kinetic;
        row.gl_bulk = e_cur.gl_bulk;
        row.boundary = wall_energy(model, cur.phi, bu);

        // Dissipation integrals of the current step.
        const Mesh& mesh = *model.mesh;
        const TriQuadRule& rule = tri_rule(kQuadNonlinear);
        for (int t = 0; t < mesh.triangle_count(); ++t) {
            const ElementGeometry geom = element_geometry(mesh, t);
            const int* pdofs = model.p1->element_scalar_dofs(t);
            const int* vdofs = model.p2v->element_scalar_dofs(t);
            for (const auto& qp : rule.points) {
                const auto pb = eval_scalar_basis(SpaceKind::P1, qp.l0, qp.l1, qp.l2);
                const auto vb = eval_scalar_basis(SpaceKind::P2, qp.l0, qp.l1, qp.l2);
                double phi = 0.0;
                Vec2 gmu = Vec2::Zero();
                for (int i = 0; i < 3; ++i) {
                    phi += cur.phi.coeffs[pdofs[i]] * pb.value[i];
                    gmu += cur.mu.coeffs[pdofs[i]] * (geom.inv_t * pb.grad_ref[i]);
                }
                Vec2 v = Vec2::Zero();
                Mat2 gv = Mat2::Zero();
                for (int i = 0; i < 6; ++i) {
                    const Vec2 c(cur.v.coeffs[2 * vdofs[i]], cur.v.coeffs[2 * vdofs[i] + 1]);
                    v += c * vb.value[i];
                    gv += c * (geom.inv_t * vb.grad_ref[i]).transpose();
                }
                const double w = qp.w * 0.5 * geom.det;
                row.diss_visc += w * tau * 2.0 * eval_eta(p, phi) * sym_grad(gv).squaredNorm();
                row.diss_mu += w * tau * p.mobility * gmu.squaredNorm();
                row.gravity_work += w * tau * eval_rho(p, phi) * model.gravity.dot(v);
            }
        }
        for_each_bottom_qp(model, kEdgeQuadDefault,
                           [&](const BottomSubsegment&, const Vec2&, double w, const std::array<int, 2>& dofs,
                               const std::array<double, 2>& sh) {
                               const double d =
                                   (cur.phi.coeffs[dofs[0]] - prev.phi.coeffs[dofs[0]]) * sh[0] +
                                   (cur.phi.coeffs[dofs[1]] - prev.phi.coeffs[dofs[1]]) * sh[1];
                               row.diss_relax += w * p.r_relax * (d / tau) * (d / tau) * tau;
                           });

        row.lhs = row.kinetic + row.gl_bulk + row.boundary + row.diss_visc + row.diss_mu + row.diss_relax;
        row.rhs = e_prev.kinetic + e_prev.gl_bulk + wall_energy(model, prev.phi, bu) + row.gravity_work;
        report.rows.push_back(row);
    }
    return report;
}

std::vector<bool> check_energy_inequality(const EnergyReport& report, double rel_tol) {
    std::vector<bool> ok;
    ok.reserve(report.rows.size());
    for (const auto& row : report.rows) {
        const double scale = std::max({std::abs(row.lhs), std::abs(row.rhs), 1.0e-300});
        ok.push_back(row.lhs <= row.rhs + rel_tol * scale);
    }
    return ok;
}

}  // namespace droplet
