#include "droplet/adjoint.hpp"

#include <cmath>
#include <stdexcept>

namespace droplet {

TangentState zero_tangent(const Model& model) {
    return {Field(*model.p2v), Field(*model.p1), Field(*model.p1), Field(*model.p1)};
}

AdjointState zero_adjoint(const Model& model, int m) {
    return {Field(*model.p2v), Field(*model.p1), Field(*model.p1), Field(*model.p1), m};
}

void for_each_bottom_qp(const Model& model, int degree,
                        const std::function<void(const BottomSubsegment&, const Vec2&, double,
                                                 const std::array<int, 2>&, const std::array<double, 2>&)>& f);

StepBlocks build_step_blocks(const Model& model, const Trajectory& traj, int m) {
    if (m < 1 || m > traj.step_count()) throw std::invalid_argument("build_step_blocks: step out of range");
    const PhysicalParams& p = model.params;
    const double tau = p.tau;
    const int np = model.np();
    const int nsd = model.ns_dim();
    const State& prev = traj.states[m - 1];
    const State& cur = traj.states[m];
    const auto& bu = traj.bu[m - 1];

    StepBlocks out;
    out.m = m;
    out.a_ns = assemble_ns_system(model, cur.phi, prev.phi, cur.mu, prev.v);
    out.j_ch = assemble_ch_jacobian(model, cur.phi, prev.phi);

    // Momentum rows, same-step phase direction: density, flux, viscosity and
    // gravity linearizations.
    {
        MatrixBuilder mb(nsd, np);
        const Field* sf[] = {&cur.phi, &cur.mu};
        const Field* vf[] = {&cur.v};
        const Vec2 gravity = model.gravity;
        assemble_mat_sv(mb, 0, 0, *model.p1, *model.p2v, kQuadNonlinear, sf, vf,
                        [&p, tau, gravity](const PointCtx& pc, const ShapeS& u, const ShapeV& w) {
                            const double rho_p = eval_rho_prime(p, pc.s[0]);
                            const Vec2 du_flux = -p.mobility * eval_rho_second(p, pc.s[0]) * u.v * pc.sg[1];
                            return 0.5 * rho_p * u.v * pc.vv[0].dot(w.v) +
                                   tau * skew_transport(du_flux, pc.vv[0], pc.vj[0], w) +
                                   tau * 2.0 * eval_eta_prime(p, pc.s[0]) * u.v *
                                       (sym_grad(pc.vj[0]).array() * sym_grad(w.g).array()).sum() -
                                   tau * rho_p * u.v * gravity.dot(w.v);
                        });
        out.b_ns_phi = mb.compress_rows(model.ns_constrained);
    }

    // Momentum rows, same-step potential direction: flux linearization plus
    // the capillary force.
    {
        MatrixBuilder mb(nsd, np);
        const Field* sf[] = {&cur.phi, &prev.phi};
        const Field* vf[] = {&cur.v};
        assemble_mat_sv(mb, 0, 0, *model.p1, *model.p2v, kQuadNonlinear, sf, vf,
                        [&p, tau](const PointCtx& pc, const ShapeS& u, const ShapeV& w) {
                            const Vec2 du_flux = -p.mobility * eval_rho_prime(p, pc.s[0]) * u.g;
                            return tau * skew_transport(du_flux, pc.vv[0], pc.vj[0], w) +
                                   tau * pc.s[1] * u.g.dot(w.v);
                        });
        out.b_ns_mu = mb.compress_rows(model.ns_constrained);
    }

    // Momentum rows, previous-step velocity direction.
    {
        MatrixBuilder mb(nsd, nsd);
        const Field* sf[] = {&prev.phi};
        const Field* vf[] = {&cur.v};
        assemble_mat_vv(mb, 0, 0, *model.p2v, *model.p2v, kQuadNonlinear, sf, vf,
                        [&p, tau](const PointCtx& pc, const ShapeV& u, const ShapeV& w) {
                            const double rho_prev = eval_rho(p, pc.s[0]);
                            return -rho_prev * u.v.dot(w.v) +
                                   tau * skew_transport(rho_prev * u.v, pc.vv[0], pc.vj[0], w);
                        });
        out.s_ns_v = mb.compress_rows(model.ns_constrained);
    }

    // Momentum rows, previous-step phase direction.
    {
        MatrixBuilder mb(nsd, np);
        const Field* sf[] = {&prev.phi, &cur.mu};
        const Field* vf[] = {&prev.v, &cur.v};
        assemble_mat_sv(mb, 0, 0, *model.p1, *model.p2v, kQuadNonlinear, sf, vf,
                        [&p, tau](const PointCtx& pc, const ShapeS& u, const ShapeV& w) {
                            const double rho_p = eval_rho_prime(p, pc.s[0]);
                            return 0.5 * rho_p * u.v * pc.vv[1].dot(w.v) - rho_p * u.v * pc.vv[0].dot(w.v) +
                                   tau * skew_transport(rho_p * u.v * pc.vv[0], pc.vv[1], pc.vj[1], w) +
                                   tau * u.v * pc.sg[1].dot(w.v);
                        });
        out.s_ns_phi = mb.compress_rows(model.ns_constrained);
    }

    // Transport row, previous-step velocity direction.
    {
        MatrixBuilder mb(2 * np, nsd);
        const Field* sf[] = {&prev.phi};
        assemble_mat_vs(mb, 0, 0, *model.p2v, *model.p1, kQuadNonlinear, sf, {},
                        [tau](const PointCtx& pc, const ShapeV& u, const ShapeS& w) {
                            return -tau * pc.s[0] * u.v.dot(w.g);
                        });
        out.s_ch_v = mb.compress();
    }

    // CH rows, previous-step phase direction. The stabilization term carries
    // the factor 2 phi^{m-1} from differentiating |phi^{m-1}|^2.
    {
        MatrixBuilder mb(2 * np, np);
        const Field* sf[] = {&prev.phi, &cur.mu};
        const Field* vf[] = {&prev.v};
        assemble_mat_ss(mb, 0, 0, *model.p1, *model.p1, kQuadNonlinear, sf, vf,
                        [&p, tau](const PointCtx& pc, const ShapeS& u, const ShapeS& w) {
                            return -u.v * w.v - tau * u.v * pc.vv[0].dot(w.g) +
                                   tau * tau / p.rho_min * 2.0 * pc.s[0] * u.v * pc.sg[1].dot(w.g);
                        });
        assemble_mat_ss(mb, np, 0, *model.p1, *model.p1, kQuadNonlinear, sf, vf,
                        [&p, tau](const PointCtx& pc, const ShapeS& u, const ShapeS& w) {
                            return tau * p.sigma / p.eps * eval_well(pc.s[0]).wm_pp * u.v * w.v;
                        });
        const double wall = p.r_relax + tau * p.s_gamma / 2.0;
        assemble_edge_mat_ss(mb, np, 0, *model.p1, *model.p1, BoundaryTag::Bottom, kEdgeQuadDefault, {},
                             [wall](const EdgePointCtx&, double u, double w) { return -wall * u * w; });
        for_each_bottom_qp(model, kEdgeQuadNonlinear,
                           [&](const BottomSubsegment& seg, const Vec2&, double w, const std::array<int, 2>& dofs,
                               const std::array<double, 2>& sh) {
                               const double bu_val = seg.patch >= 0 ? bu[seg.patch] : 0.0;
                               const double phi_val =
                                   prev.phi.coeffs[dofs[0]] * sh[0] + prev.phi.coeffs[dofs[1]] * sh[1];
                               const double g2 = tau * gamma_wall_second(p, phi_val, bu_val);
                               for (int i = 0; i < 2; ++i)
                                   for (int j = 0; j < 2; ++j)
                                       mb.add(np + dofs[i], dofs[j], w * g2 * sh[j] * sh[i]);
                           });
        out.s_ch_phi = mb.compress();
    }
    return out;
}

std::vector<StepBlocks> build_all_blocks(const Model& model, const Trajectory& traj) {
    std::vector<StepBlocks> blocks;
    blocks.reserve(traj.step_count());
    for (int m = 1; m <= traj.step_count(); ++m) blocks.push_back(build_step_blocks(model, traj, m));
    return blocks;
}

Vector control_coupling_ch(const Model& model, const Field& phi_prev, std::span<const double> du_patches) {
    const int np = model.np();
    const double tau = model.params.tau;
    const double sigma_lg = model.params.sigma_lg;
    Vector rhs = Vector::Zero(2 * np);
    for_each_bottom_qp(model, kEdgeQuadNonlinear,
                       [&](const BottomSubsegment& seg, const Vec2&, double w, const std::array<int, 2>& dofs,
                           const std::array<double, 2>& sh) {
                           if (seg.patch < 0) return;
                           const double phi_val =
                               phi_prev.coeffs[dofs[0]] * sh[0] + phi_prev.coeffs[dofs[1]] * sh[1];
                           // d gamma'/d(Bu) with the wall-energy orientation of gamma_wall.
                           const double val =
                               -tau * sigma_lg * du_patches[seg.patch] * eval_theta(phi_val).th_p;
                           rhs[np + dofs[0]] += w * val * sh[0];
                           rhs[np + dofs[1]] += w * val * sh[1];
                       });
    return rhs;
}

namespace {

Vector stack_ns(const Model& model, const Field& v, const Field& p) {
    Vector x(model.ns_dim());
    x.head(model.nv()) = v.coeffs;
    x.tail(model.np()) = p.coeffs;
    return x;
}

Vector stack_ch(const Field& phi, const Field& mu) {
    Vector x(phi.coeffs.size() + mu.coeffs.size());
    x.head(phi.coeffs.size()) = phi.coeffs;
    x.tail(mu.coeffs.size()) = mu.coeffs;
    return x;
}

void mask_constrained(const Model& model, Vector& x) {
    for (int i = 0; i < model.ns_dim(); ++i)
        if (model.ns_constrained[i]) x[i] = 0.0;
}

void shift_mean(const Model& model, Field& p1_field) {
    p1_field.coeffs.array() -= integrate(p1_field) / model.mesh->total_area();
}

}  // namespace

TangentState tangent_step(const Model& model, const Trajectory& traj, int m, const TangentState& d_prev,
                          const ControlVector* du, SolverWorkspace& ws) {
    const int np = model.np();
    const StepBlocks blocks = build_step_blocks(model, traj, m);

    const Vector dns_prev = stack_ns(model, d_prev.d_v, d_prev.d_p);
    Vector rhs_ch = -(blocks.s_ch_v * dns_prev + blocks.s_ch_phi * d_prev.d_phi.coeffs);
    if (du) {
        const auto du_patches = bu_for_step(*du, m, model.params.tau);
        rhs_ch -= control_coupling_ch(model, traj.states[m - 1].phi, du_patches);
    }
    ws.ch.factorize(blocks.j_ch);
    const Vector dch = ws.ch.solve(rhs_ch);

    TangentState out = zero_tangent(model);
    out.d_phi.coeffs = dch.head(np);
    out.d_mu.coeffs = dch.tail(np);

    Vector rhs_ns = -(blocks.b_ns_phi * out.d_phi.coeffs + blocks.b_ns_mu * out.d_mu.coeffs +
                      blocks.s_ns_v * dns_prev + blocks.s_ns_phi * d_prev.d_phi.coeffs);
    mask_constrained(model, rhs_ns);
    ws.ns.factorize(blocks.a_ns);
    const Vector dns = ws.ns.solve(rhs_ns);
    out.d_v.coeffs = dns.head(model.nv());
    out.d_p.coeffs = dns.tail(np);
    shift_mean(model, out.d_p);
    return out;
}

std::vector<TangentState> tangent_sweep(const Model& model, const Trajectory& traj, const ControlVector* du,
                                        const TangentState* d0) {
    std::vector<TangentState> d;
    d.reserve(traj.step_count() + 1);
    d.push_back(d0 ? *d0 : zero_tangent(model));
    SolverWorkspace ws;
    for (int m = 1; m <= traj.step_count(); ++m)
        d.push_back(tangent_step(model, traj, m, d.back(), du, ws));
    return d;
}

namespace {

AdjointState adjoint_step_impl(const Model& model, const Trajectory& traj, int m,
                               const AdjointState& adj_next, const Field& phi_d, SolverWorkspace& ws,
                               const StepBlocks& blocks, const StepBlocks* next_blocks) {
    const int np = model.np();
    const int m_steps = traj.step_count();

    Vector rhs_ns = Vector::Zero(model.ns_dim());
    if (m < m_steps) {
        const Vector pns_next = stack_ns(model, adj_next.p_v, adj_next.p_p);
        const Vector pch_next = stack_ch(adj_next.p_mu, adj_next.p_phi);
        rhs_ns = -(next_blocks->s_ns_v.transpose() * pns_next + next_blocks->s_ch_v.transpose() * pch_next);
        mask_constrained(model, rhs_ns);
    }
    ws.ns.factorize(blocks.a_ns);
    const Vector pns = ws.ns.solve_transposed(rhs_ns);

    AdjointState out = zero_adjoint(model, m);
    out.p_v.coeffs = pns.head(model.nv());
    out.p_p.coeffs = pns.tail(np);

    Vector rhs_phi = -model.params.tau * (model.mass_p1 * (traj.states[m].phi.coeffs - phi_d.coeffs));
    rhs_phi -= blocks.b_ns_phi.transpose() * pns;
    Vector rhs_mu = -(blocks.b_ns_mu.transpose() * pns);
    if (m < m_steps) {
        const Vector pns_next = stack_ns(model, adj_next.p_v, adj_next.p_p);
        const Vector pch_next = stack_ch(adj_next.p_mu, adj_next.p_phi);
        rhs_phi -= next_blocks->s_ns_phi.transpose() * pns_next;
        rhs_phi -= (next_blocks->s_ch_phi.transpose() * pch_next);
    }
    Vector rhs_ch(2 * np);
    rhs_ch.head(np) = rhs_phi;
    rhs_ch.tail(np) = rhs_mu;

    ws.ch.factorize(blocks.j_ch);
    const Vector pch = ws.ch.solve_transposed(rhs_ch);
    out.p_mu.coeffs = pch.head(np);
    out.p_phi.coeffs = pch.tail(np);
    // p_p stays in the pinned gauge: it is a multiplier, and shifting it
    // would no longer solve the transposed system.
    return out;
}

}  // namespace

AdjointState adjoint_step(const Model& model, const Trajectory& traj, int m, const AdjointState& adj_next,
                          const Field& phi_d, SolverWorkspace& ws, const StepBlocks* next_blocks) {
    const StepBlocks blocks = build_step_blocks(model, traj, m);
    StepBlocks next_local;
    if (m < traj.step_count() && !next_blocks) {
        next_local = build_step_blocks(model, traj, m + 1);
        next_blocks = &next_local;
    }
    return adjoint_step_impl(model, traj, m, adj_next, phi_d, ws, blocks, next_blocks);
}

std::vector<AdjointState> adjoint_sweep(const Model& model, const Trajectory& traj, const Field& phi_d) {
    const int m_steps = traj.step_count();
    std::vector<AdjointState> adj(m_steps, zero_adjoint(model, 0));
    SolverWorkspace ws;
    AdjointState next = zero_adjoint(model, m_steps + 1);
    StepBlocks blocks_next;
    for (int m = m_steps; m >= 1; --m) {
        StepBlocks blocks = build_step_blocks(model, traj, m);
        adj[m - 1] = adjoint_step_impl(model, traj, m, next, phi_d, ws, blocks,
                                       m < m_steps ? &blocks_next : nullptr);
        next = adj[m - 1];
        blocks_next = std::move(blocks);
    }
    return adj;
}

ControlVector reduced_gradient(const Model& model, const ControlVector& u, const Trajectory& traj,
                               const std::vector<AdjointState>& adj) {
    const int m_steps = traj.step_count();
    if (static_cast<int>(adj.size()) != m_steps)
        throw std::invalid_argument("reduced_gradient: adjoint trajectory length mismatch");
    const double sigma_lg = model.params.sigma_lg;

    std::vector<std::vector<double>> q_step_patch(m_steps,
                                                  std::vector<double>(model.grid.s_patches, 0.0));
    for (int m = 1; m <= m_steps; ++m) {
        const Field& phi_prev = traj.states[m - 1].phi;
        const Field& p_phi = adj[m - 1].p_phi;
        auto& q = q_step_patch[m - 1];
        for_each_bottom_qp(model, kEdgeQuadNonlinear,
                           [&](const BottomSubsegment& seg, const Vec2&, double w, const std::array<int, 2>& dofs,
                               const std::array<double, 2>& sh) {
                               if (seg.patch < 0) return;
                               const double phi_val =
                                   phi_prev.coeffs[dofs[0]] * sh[0] + phi_prev.coeffs[dofs[1]] * sh[1];
                               const double pphi_val =
                                   p_phi.coeffs[dofs[0]] * sh[0] + p_phi.coeffs[dofs[1]] * sh[1];
                               q[seg.patch] += w * (-sigma_lg) * eval_theta(phi_val).th_p * pphi_val;
                           });
    }
    ControlVector g = apply_B_star(model.grid, q_step_patch, model.params.tau);
    for (int r = 0; r < model.grid.r_intervals; ++r)
        for (int s = 0; s < model.grid.s_patches; ++s)
            g.at(r, s) += model.params.alpha_reg * bstarb_weight(model.grid, r, s) * u.at(r, s);
    return g;
}

ObjectiveValue objective_value(const Model& model, const Trajectory& traj, const ControlVector& u,
                               const Field& phi_d) {
    ObjectiveValue j;
    const double tau = model.params.tau;
    for (int m = 1; m <= traj.step_count(); ++m) {
        const Vector e = traj.states[m].phi.coeffs - phi_d.coeffs;
        j.tracking += 0.5 * tau * e.dot(model.mass_p1 * e);
    }
    j.regularization = 0.5 * model.params.alpha_reg * bu_norm_sq(u);
    j.total = j.tracking + j.regularization;
    return j;
}

ResidualImage apply_linearization(const Model& model, const std::vector<StepBlocks>& blocks,
                                  const std::vector<TangentState>& d) {
    const int m_steps = static_cast<int>(blocks.size());
    if (static_cast<int>(d.size()) != m_steps + 1)
        throw std::invalid_argument("apply_linearization: direction length mismatch");
    ResidualImage r;
    for (int m = 1; m <= m_steps; ++m) {
        const StepBlocks& b = blocks[m - 1];
        const Vector dns = stack_ns(model, d[m].d_v, d[m].d_p);
        const Vector dns_prev = stack_ns(model, d[m - 1].d_v, d[m - 1].d_p);
        r.ns.push_back(b.a_ns * dns + b.b_ns_phi * d[m].d_phi.coeffs + b.b_ns_mu * d[m].d_mu.coeffs +
                       b.s_ns_v * dns_prev + b.s_ns_phi * d[m - 1].d_phi.coeffs);
        r.ch.push_back(b.j_ch * stack_ch(d[m].d_phi, d[m].d_mu) + b.s_ch_v * dns_prev +
                       b.s_ch_phi * d[m - 1].d_phi.coeffs);
    }
    return r;
}

SlotImage apply_linearization_transpose(const Model& model, const std::vector<StepBlocks>& blocks,
                                        const std::vector<AdjointState>& p) {
    const int m_steps = static_cast<int>(blocks.size());
    if (static_cast<int>(p.size()) != m_steps)
        throw std::invalid_argument("apply_linearization_transpose: multiplier length mismatch");
    const int np = model.np();
    SlotImage out;
    out.v_slot.assign(m_steps + 1, Vector::Zero(model.ns_dim()));
    out.phi_slot.assign(m_steps + 1, Vector::Zero(np));
    out.mu_slot.assign(m_steps + 1, Vector::Zero(np));
    for (int m = 1; m <= m_steps; ++m) {
        const StepBlocks& b = blocks[m - 1];
        const Vector pns = stack_ns(model, p[m - 1].p_v, p[m - 1].p_p);
        const Vector pch = stack_ch(p[m - 1].p_mu, p[m - 1].p_phi);
        const Vector jt = b.j_ch.transpose() * pch;
        out.v_slot[m] += b.a_ns.transpose() * pns;
        out.phi_slot[m] += b.b_ns_phi.transpose() * pns + jt.head(np);
        out.mu_slot[m] += b.b_ns_mu.transpose() * pns + jt.tail(np);
        out.v_slot[m - 1] += b.s_ns_v.transpose() * pns + b.s_ch_v.transpose() * pch;
        out.phi_slot[m - 1] += b.s_ns_phi.transpose() * pns + b.s_ch_phi.transpose() * pch;
    }
    return out;
}

std::vector<FdEntry> fd_gradient_report(const Model& model, const Field& phi0, const Field& v0,
                                        const ControlVector& u, const Field& phi_d,
                                        const std::vector<ControlVector>& directions,
                                        const std::vector<double>& epsilons, bool surrogate) {
    ControlVector grad(u.grid);
    if (surrogate) {
        for (int r = 0; r < u.grid.r_intervals; ++r)
            for (int s = 0; s < u.grid.s_patches; ++s)
                grad.at(r, s) = model.params.alpha_reg * bstarb_weight(u.grid, r, s) * u.at(r, s);
    } else {
        const Trajectory traj = simulate(model, phi0, v0, u);
        const auto adj = adjoint_sweep(model, traj, phi_d);
        grad = reduced_gradient(model, u, traj, adj);
    }
    auto eval_j = [&](const ControlVector& uu) {
        if (surrogate) return 0.5 * model.params.alpha_reg * bu_norm_sq(uu);
        const Trajectory traj = simulate(model, phi0, v0, uu);
        return objective_value(model, traj, uu, phi_d).total;
    };

    std::vector<FdEntry> entries;
    for (size_t k = 0; k < directions.size(); ++k) {
        const ControlVector& dir = directions[k];
        if (dir.coeffs.norm() == 0.0) throw std::invalid_argument("fd_gradient_report: zero direction");
        const double gdot = grad.coeffs.dot(dir.coeffs);
        for (double eps : epsilons) {
            ControlVector up = u, um = u;
            up.coeffs += eps * dir.coeffs;
            um.coeffs -= eps * dir.coeffs;
            const double fd = (eval_j(up) - eval_j(um)) / (2.0 * eps);
            FdEntry e;
            e.direction = static_cast<int>(k);
            e.eps = eps;
            e.fd_value = fd;
            e.grad_dot = gdot;
            e.rel_error = std::abs(fd - gdot) / std::max({std::abs(fd), std::abs(gdot), 1e-300});
            entries.push_back(e);
        }
    }
    return entries;
}

}  // namespace droplet
