#include <doctest.h>

#include <random>

#include "dense_oracle.hpp"
#include "test_helpers.hpp"

using namespace droplet;
using namespace droplet::testing;

namespace {

std::vector<TangentState> random_directions(const Model& model, int count, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto fill = [&](Vector& v) {
        for (int i = 0; i < v.size(); ++i) v[i] = unif(rng);
    };
    std::vector<TangentState> d;
    for (int k = 0; k < count; ++k) {
        TangentState s = zero_tangent(model);
        fill(s.d_v.coeffs);
        fill(s.d_p.coeffs);
        fill(s.d_phi.coeffs);
        fill(s.d_mu.coeffs);
        for (int i = 0; i < model.nv(); ++i)
            if (model.ns_constrained[i]) s.d_v.coeffs[i] = 0.0;
        if (model.ns_constrained[model.nv()]) s.d_p.coeffs[0] = 0.0;
        d.push_back(std::move(s));
    }
    return d;
}

std::vector<AdjointState> random_multipliers(const Model& model, int count, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto fill = [&](Vector& v) {
        for (int i = 0; i < v.size(); ++i) v[i] = unif(rng);
    };
    std::vector<AdjointState> p;
    for (int k = 0; k < count; ++k) {
        AdjointState s = zero_adjoint(model, k + 1);
        fill(s.p_v.coeffs);
        fill(s.p_p.coeffs);
        fill(s.p_phi.coeffs);
        fill(s.p_mu.coeffs);
        for (int i = 0; i < model.nv(); ++i)
            if (model.ns_constrained[i]) s.p_v.coeffs[i] = 0.0;
        if (model.ns_constrained[model.nv()]) s.p_p.coeffs[0] = 0.0;
        p.push_back(std::move(s));
    }
    return p;
}

double pair_residual_multiplier(const Model& model, const ResidualImage& r,
                                const std::vector<AdjointState>& p) {
    double total = 0.0;
    for (size_t m = 0; m < r.ns.size(); ++m) {
        total += r.ns[m].head(model.nv()).dot(p[m].p_v.coeffs);
        total += r.ns[m].tail(model.np()).dot(p[m].p_p.coeffs);
        total += r.ch[m].head(model.np()).dot(p[m].p_mu.coeffs);
        total += r.ch[m].tail(model.np()).dot(p[m].p_phi.coeffs);
    }
    return total;
}

double pair_slots_direction(const Model& model, const SlotImage& s, const std::vector<TangentState>& d) {
    double total = 0.0;
    for (size_t m = 0; m < s.v_slot.size(); ++m) {
        total += s.v_slot[m].head(model.nv()).dot(d[m].d_v.coeffs);
        total += s.v_slot[m].tail(model.np()).dot(d[m].d_p.coeffs);
        total += s.phi_slot[m].dot(d[m].d_phi.coeffs);
        total += s.mu_slot[m].dot(d[m].d_mu.coeffs);
    }
    return total;
}

}  // namespace

TEST_SUITE_BEGIN("adjoint");

TEST_CASE("tangent of an unperturbed problem vanishes") {
    const Model model = make_test_model(4, 2, 0.1, 0.2);
    const Field phi0 = initial_droplet(Vec2(0.375, 0.0), 0.25, model.params.eps, *model.p1);
    const Trajectory traj = simulate(model, phi0, Field(*model.p2v), ControlVector(model.grid));
    const auto d = tangent_sweep(model, traj, nullptr);
    for (const auto& s : d) {
        CHECK(s.d_phi.coeffs.cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.d_v.coeffs.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("tangent conserves the phase integral") {
    const Model model = make_test_model(8, 4, 0.1, 0.3);
    const Field phi0 = initial_droplet(Vec2(0.375, 0.0), 0.25, model.params.eps, *model.p1);
    const ControlVector u(model.grid);
    const Trajectory traj = simulate(model, phi0, Field(*model.p2v), u);
    const ControlVector du = random_control(model.grid, 31, 0.2);
    const auto d = tangent_sweep(model, traj, &du);
    for (const auto& s : d) CHECK(std::abs(integrate(s.d_phi)) <= 1e-10);
}

TEST_CASE("tangent step matches the dense oracle") {
    const Model model = make_test_model(2, 2, 0.05, 0.05);
    const Field phi_prev = smooth_phase(model);
    const Field v_prev = smooth_velocity(model);
    State prev{v_prev, Field(*model.p1), phi_prev, Field(*model.p1), 0.0};

    Trajectory traj;
    traj.states.push_back(prev);
    SolverWorkspace ws;
    NewtonOptions tight;
    tight.rtol = 1e-13;
    tight.atol = 1e-14;
    ControlVector u(model.grid);
    u.coeffs.setConstant(0.1);
    traj.bu.push_back(bu_for_step(u, 1, model.params.tau));
    traj.states.push_back(step(model, prev, u, 1, ws, nullptr, tight));

    TangentState d_prev = random_directions(model, 1, 77)[0];
    const ControlVector du = random_control(model.grid, 78, 1.0);
    const TangentState d = tangent_step(model, traj, 1, d_prev, &du, ws);
    const TangentState od = oracle::oracle_tangent_step(model, traj.states[0], traj.states[1], traj.bu[0],
                                                        d_prev, bu_for_step(du, 1, model.params.tau));
    CHECK(rel_inf_diff(d.d_phi.coeffs, od.d_phi.coeffs) <= 1e-9);
    CHECK(rel_inf_diff(d.d_mu.coeffs, od.d_mu.coeffs) <= 1e-9);
    CHECK(rel_inf_diff(d.d_v.coeffs, od.d_v.coeffs) <= 1e-9);
    CHECK(rel_inf_diff(d.d_p.coeffs, od.d_p.coeffs) <= 1e-9);
}

TEST_CASE("tangent is the directional derivative of the forward map") {
    const Model model = make_test_model(8, 4, 0.1, 0.3);
    const Field phi0 = initial_droplet(Vec2(0.375, 0.0), 0.25, model.params.eps, *model.p1);
    const Field v0(*model.p2v);
    const ControlVector u(model.grid);
    NewtonOptions tight;
    tight.rtol = 1e-13;
    tight.atol = 1e-14;
    const Trajectory traj = simulate(model, phi0, v0, u, tight);
    // Direction amplitude keeps the epsilon = 1e-5 difference above the
    // linear-solver noise floor of the velocity block.
    const ControlVector du = random_control(model.grid, 41, 3.0);
    const auto d = tangent_sweep(model, traj, &du);

    auto state_error = [&](double eps) {
        ControlVector ue = u;
        ue.coeffs += eps * du.coeffs;
        const Trajectory te = simulate(model, phi0, v0, ue, tight);
        double err = 0.0;
        for (int m = 1; m <= traj.step_count(); ++m) {
            err = std::max(err, model.l2_norm((te.states[m].phi.coeffs - traj.states[m].phi.coeffs) / eps -
                                              d[m].d_phi.coeffs));
            err = std::max(err, ((te.states[m].v.coeffs - traj.states[m].v.coeffs) / eps -
                                 d[m].d_v.coeffs).norm());
        }
        return err;
    };

    const double e3 = state_error(1e-3), e4 = state_error(1e-4), e5 = state_error(1e-5);
    const double order_a = std::log(e3 / e4) / std::log(10.0);
    const double order_b = std::log(e4 / e5) / std::log(10.0);
    CHECK(order_a >= 0.9);
    CHECK(order_b >= 0.9);
}

TEST_CASE("adjoint of a perfectly tracked trajectory vanishes") {
    Model model = make_test_model(4, 2, 0.1, 0.3, 0.0);
    model.gravity = Vec2::Zero();
    const Field one = interpolate([](const Vec2&) { return 1.0; }, *model.p1);
    const Trajectory traj = simulate(model, one, Field(*model.p2v), ControlVector(model.grid));
    const auto adj = adjoint_sweep(model, traj, one);
    for (const auto& a : adj) {
        CHECK(a.p_phi.coeffs.cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(a.p_mu.coeffs.cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(a.p_v.coeffs.cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("transpose identity of the space-time linearization") {
    const Model model = make_test_model(6, 3, 0.1, 0.2);
    const Field phi0 = initial_droplet(Vec2(0.375, 0.0), 0.25, model.params.eps, *model.p1);
    const ControlVector u = random_control(model.grid, 3, 0.3);
    const Trajectory traj = simulate(model, phi0, Field(*model.p2v), u);
    REQUIRE(traj.step_count() == 2);

    const auto blocks = build_all_blocks(model, traj);
    const auto d = random_directions(model, 3, 51);
    const auto p = random_multipliers(model, 2, 52);

    const double lhs = pair_residual_multiplier(model, apply_linearization(model, blocks, d), p);
    const double rhs = pair_slots_direction(model, apply_linearization_transpose(model, blocks, p), d);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max({std::abs(lhs), std::abs(rhs), 1.0}));
}

TEST_CASE("the backward sweep solves the transposed system") {
    const Model model = make_test_model(6, 3, 0.1, 0.3);
    const Field phi0 = initial_droplet(Vec2(0.375, 0.0), 0.25, model.params.eps, *model.p1);
    const ControlVector u = random_control(model.grid, 9, 0.3);
    const Trajectory traj = simulate(model, phi0, Field(*model.p2v), u);
    const Field phi_d = initial_droplet(Vec2(0.625, 0.0), 0.25, model.params.eps, *model.p1);

    const auto adj = adjoint_sweep(model, traj, phi_d);
    const auto blocks = build_all_blocks(model, traj);
    const SlotImage slots = apply_linearization_transpose(model, blocks, adj);

    for (int m = 1; m <= traj.step_count(); ++m) {
        // Momentum and potential slots are homogeneous.
        double vmax = 0.0;
        for (int i = 0; i < model.nv(); ++i)
            if (!model.ns_constrained[i]) vmax = std::max(vmax, std::abs(slots.v_slot[m][i]));
        const double scale = std::max(1.0, adj[m - 1].p_v.coeffs.cwiseAbs().maxCoeff());
        CHECK(vmax <= 1e-9 * scale);
        CHECK(slots.mu_slot[m].cwiseAbs().maxCoeff() <= 1e-9 * scale);
        // Phase slot carries the tracking misfit.
        const Vector expected =
            -model.params.tau * (model.mass_p1 * (traj.states[m].phi.coeffs - phi_d.coeffs));
        CHECK((slots.phi_slot[m] - expected).cwiseAbs().maxCoeff() <=
              1e-9 * std::max(1.0, expected.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("single-step adjoint matches the dense transposed-Jacobian oracle") {
    const Model model = make_test_model(2, 2, 0.05, 0.05);
    const Field phi0 = smooth_phase(model);
    ControlVector u(model.grid);
    u.coeffs.setConstant(-0.2);
    NewtonOptions tight;
    tight.rtol = 1e-13;
    tight.atol = 1e-14;
    const Trajectory traj = simulate(model, phi0, smooth_velocity(model), u, tight);
    REQUIRE(traj.step_count() == 1);
    const Field phi_d = interpolate([](const Vec2& x) { return std::cos(3.0 * x.x()); }, *model.p1);

    const auto adj = adjoint_sweep(model, traj, phi_d);
    const AdjointState oracle = oracle::oracle_adjoint_single_step(model, traj.states[0], traj.states[1],
                                                                   traj.bu[0], phi_d);
    CHECK(rel_inf_diff(adj[0].p_phi.coeffs, oracle.p_phi.coeffs) <= 1e-9);
    CHECK(rel_inf_diff(adj[0].p_mu.coeffs, oracle.p_mu.coeffs) <= 1e-9);
    CHECK(rel_inf_diff(adj[0].p_v.coeffs, oracle.p_v.coeffs) <= 1e-9);
    CHECK(rel_inf_diff(adj[0].p_p.coeffs, oracle.p_p.coeffs) <= 1e-9);
}

TEST_CASE("coupled CH blocks are symmetric where the forms are symmetric") {
    const Model model = make_test_model(4, 2, 0.1, 0.1);
    const Field phi0 = smooth_phase(model);
    const Trajectory traj = simulate(model, phi0, Field(*model.p2v), ControlVector(model.grid));
    const StepBlocks blocks = build_step_blocks(model, traj, 1);
    const int np = model.np();
    const Eigen::MatrixXd j = Eigen::MatrixXd(blocks.j_ch);
    // Diagonal field blocks of the Newton matrix are symmetric, which is what
    // makes the printed backward scheme the literal transpose.
    CHECK((j.block(0, 0, np, np) - j.block(0, 0, np, np).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((j.block(np, 0, np, np) - j.block(np, 0, np, np).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((j.block(0, np, np, np) - j.block(0, np, np, np).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("reduced gradient with a vanishing adjoint is the regularization term") {
    const Model model = make_test_model(4, 2, 0.1, 0.2);
    const ControlVector u = random_control(model.grid, 19, 0.5);
    Trajectory traj;
    traj.states.push_back(initial_state(
        model, interpolate([](const Vec2&) { return 1.0; }, *model.p1), Field(*model.p2v)));
    SolverWorkspace ws;
    for (int m = 1; m <= 2; ++m) {
        traj.bu.push_back(bu_for_step(u, m, model.params.tau));
        traj.states.push_back(step(model, traj.states.back(), u, m, ws));
    }
    std::vector<AdjointState> adj(2, zero_adjoint(model, 0));
    const ControlVector g = reduced_gradient(model, u, traj, adj);
    for (int r = 0; r < model.grid.r_intervals; ++r)
        for (int s = 0; s < model.grid.s_patches; ++s)
            CHECK(g.at(r, s) == doctest::Approx(model.params.alpha_reg * bstarb_weight(model.grid, r, s) *
                                                u.at(r, s))
                                    .epsilon(1e-12));
}

TEST_CASE("reduced gradient agrees with central differences") {
    const Model model = make_test_model(8, 4, 0.1, 0.5);
    const Field phi0 = initial_droplet(Vec2(0.375, 0.0), 0.25, model.params.eps, *model.p1);
    const Field v0(*model.p2v);
    const Field phi_d = initial_droplet(Vec2(0.45, 0.0), 0.25, model.params.eps, *model.p1);
    const ControlVector u(model.grid);

    std::vector<ControlVector> dirs;
    for (unsigned seed : {61u, 62u}) {
        ControlVector d = random_control(model.grid, seed, 1.0);
        d.coeffs /= d.coeffs.norm();
        dirs.push_back(std::move(d));
    }
    const auto entries =
        fd_gradient_report(model, phi0, v0, u, phi_d, dirs, {1e-2, 1e-3, 1e-4, 1e-5});
    for (int k = 0; k < 2; ++k) {
        double best = 1e300;
        for (const auto& e : entries)
            if (e.direction == k) best = std::min(best, e.rel_error);
        CHECK(best <= 1e-3);
    }
}

TEST_CASE("quadratic surrogate differentiates exactly") {
    const Model model = make_test_model(4, 2, 0.1, 0.2);
    ControlVector u = random_control(model.grid, 71, 0.4);
    ControlVector dir = random_control(model.grid, 72, 1.0);
    dir.coeffs /= dir.coeffs.norm();
    const Field dummy(*model.p1);
    // At the zero control the quadratic difference cancels exactly; away from
    // it only representation roundoff of u + eps*d remains.
    ControlVector zero_u(model.grid);
    const auto exact = fd_gradient_report(model, dummy, Field(*model.p2v), zero_u, dummy, {dir},
                                          {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}, true);
    for (const auto& e : exact) CHECK(e.rel_error <= 1e-10);
    const auto entries = fd_gradient_report(model, dummy, Field(*model.p2v), u, dummy, {dir},
                                            {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}, true);
    for (const auto& e : entries) CHECK(e.rel_error <= 1e-8);

    ControlVector zero_dir(model.grid);
    CHECK_THROWS_AS(fd_gradient_report(model, dummy, Field(*model.p2v), u, dummy, {zero_dir}, {1e-3}, true),
                    std::invalid_argument);
}

TEST_CASE("gradient vanishes at a one-coefficient stationary point") {
    // Single control coefficient, short horizon; the golden-section oracle on
    // J locates the interior stationary point.
    const Model model = make_test_model(6, 3, 0.1, 0.3, -15.0, 1, 1);
    const Field phi0 = initial_droplet(Vec2(0.45, 0.0), 0.25, model.params.eps, *model.p1);
    const Field v0(*model.p2v);
    const Field phi_d = initial_droplet(Vec2(0.5, 0.0), 0.25, model.params.eps, *model.p1);

    auto j_of = [&](double c) {
        ControlVector u(model.grid);
        u.coeffs[0] = c;
        return objective_value(model, simulate(model, phi0, v0, u), u, phi_d).total;
    };
    double a = -0.8, b = 0.8;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = j_of(x1), f2 = j_of(x2);
    while (b - a > 1e-6) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = j_of(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = j_of(x2);
        }
    }
    const double u_star = 0.5 * (a + b);

    ControlVector u(model.grid);
    u.coeffs[0] = u_star;
    const Trajectory traj = simulate(model, phi0, v0, u);
    const auto adj = adjoint_sweep(model, traj, phi_d);
    const ControlVector g = reduced_gradient(model, u, traj, adj);
    // The gradient scale is J''; compare against a curvature estimate so the
    // check is resolution-independent.
    const double curvature = std::abs(j_of(u_star + 0.05) + j_of(u_star - 0.05) - 2.0 * j_of(u_star)) /
                             (0.05 * 0.05);
    CHECK(std::abs(g.coeffs[0]) <= 1e-4 * std::max(curvature, 1e-6));
}

TEST_SUITE_END();
