#include <doctest.h>

#include "test_helpers.hpp"

using namespace droplet;
using namespace droplet::testing;

TEST_SUITE_BEGIN("optimize");

TEST_CASE("pure quadratic objective collapses to zero in a few iterations") {
    // With a pure-phase trajectory the control cannot move the phase, so the
    // reduced objective is exactly the quadratic penalty.
    Model model = make_test_model(4, 2, 0.1, 0.2, 0.0, 2, 2);
    model.gravity = Vec2::Zero();
    const Field one = interpolate([](const Vec2&) { return 1.0; }, *model.p1);
    const Field v0(*model.p2v);

    ControlVector u0(model.grid);
    u0.coeffs << 0.7, -0.4, 0.3, 0.8;

    OptimizerConfig cfg;
    cfg.max_iters = 5;
    cfg.grad_tol = 1e-14;
    const OptResult res = optimize(model, one, v0, u0, one, cfg);
    CHECK(res.converged);
    CHECK(res.history.size() <= 4);  // start plus at most three accepted iterates
    CHECK(res.u_opt.coeffs.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(res.history.back().j <= 1e-25);
}

TEST_CASE("descent is monotone, iterates feasible, runs deterministic") {
    const Model model = make_test_model(8, 4, 0.1, 0.4);
    const Field phi0 = initial_droplet(Vec2(0.375, 0.0), 0.25, model.params.eps, *model.p1);
    const Field v0(*model.p2v);
    const Field phi_d = initial_droplet(Vec2(0.45, 0.0), 0.25, model.params.eps, *model.p1);

    OptimizerConfig cfg;
    cfg.max_iters = 5;
    cfg.grad_tol = 1e-12;

    const OptResult a = optimize(model, phi0, v0, ControlVector(model.grid), phi_d, cfg);
    for (size_t i = 1; i < a.history.size(); ++i) CHECK(a.history[i].j <= a.history[i - 1].j);
    CHECK(is_admissible(a.u_opt, model.box));
    CHECK(a.history.back().j < a.history.front().j);

    const OptResult b = optimize(model, phi0, v0, ControlVector(model.grid), phi_d, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].j == b.history[i].j);
    CHECK((a.u_opt.coeffs - b.u_opt.coeffs).norm() == 0.0);
}

TEST_CASE("infeasible starting point is projected") {
    Model model = make_test_model(4, 2, 0.1, 0.1, 0.0, 1, 1);
    model.gravity = Vec2::Zero();
    const Field one = interpolate([](const Vec2&) { return 1.0; }, *model.p1);
    ControlVector u0(model.grid);
    u0.coeffs[0] = 5.0;
    OptimizerConfig cfg;
    cfg.max_iters = 1;
    const OptResult res = optimize(model, one, Field(*model.p2v), u0, one, cfg);
    CHECK(is_admissible(res.u_opt, model.box));
}

TEST_CASE("one-coefficient problem agrees with a golden-section oracle") {
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
    while (b - a > 1e-7) {
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

    OptimizerConfig cfg;
    cfg.max_iters = 60;
    cfg.grad_tol = 1e-9;
    const OptResult res = optimize(model, phi0, v0, ControlVector(model.grid), phi_d, cfg);
    CHECK(std::abs(res.u_opt.coeffs[0] - u_star) <= 1e-4);
}

TEST_CASE("variational-inequality violation logic") {
    AdmissibleBox box;
    box.cos_theta_eq = 0.0;
    ControlGrid grid;
    grid.r_intervals = 1;
    grid.s_patches = 4;
    ControlVector u(grid), g(grid);
    u.coeffs << -0.9, 0.9, 0.0, 0.9;
    g.coeffs << -0.2, -0.3, 1e-12, 0.25;
    // Lower bound with an inward-pushing gradient and an upper bound with an
    // outward one are violations; an upper bound with g < 0 is stationary.
    const double worst = evaluate_variational_inequality(u, g, box);
    CHECK(worst == doctest::Approx(0.25));

    g.coeffs << 0.2, -0.3, 1e-12, -0.25;
    CHECK(evaluate_variational_inequality(u, g, box) <= 1e-11);

    u.coeffs << 0.0, 0.0, 0.0, 0.0;
    g.coeffs << 0.1, 0.0, 0.0, 0.0;
    CHECK(evaluate_variational_inequality(u, g, box) == doctest::Approx(0.1));
}

TEST_CASE("optimizer output satisfies the first-order conditions") {
    const Model model = make_test_model(6, 3, 0.1, 0.3, -15.0, 1, 2);
    const Field phi0 = initial_droplet(Vec2(0.45, 0.0), 0.25, model.params.eps, *model.p1);
    const Field v0(*model.p2v);
    const Field phi_d = initial_droplet(Vec2(0.5, 0.0), 0.25, model.params.eps, *model.p1);

    OptimizerConfig cfg;
    cfg.max_iters = 80;
    cfg.grad_tol = 1e-7;
    const OptResult res = optimize(model, phi0, v0, ControlVector(model.grid), phi_d, cfg);
    REQUIRE(res.converged);

    const auto adj = adjoint_sweep(model, res.final_trajectory, phi_d);
    const ControlVector g = reduced_gradient(model, res.u_opt, res.final_trajectory, adj);
    CHECK(evaluate_variational_inequality(res.u_opt, g, model.box) <= 10.0 * cfg.grad_tol);
}

TEST_CASE("reduced objective splits tracking and regularization") {
    Model model = make_test_model(4, 2, 0.1, 0.2, 0.0, 2, 2);
    model.gravity = Vec2::Zero();
    const Field one = interpolate([](const Vec2&) { return 1.0; }, *model.p1);
    ControlVector u(model.grid);
    u.coeffs[0] = 0.5;

    const auto [j, traj] = reduced_objective(model, one, Field(*model.p2v), u, one);
    CHECK(j.tracking <= 1e-20);
    const double w = bstarb_weight(model.grid, 0, 0);
    CHECK(j.regularization ==
          doctest::Approx(0.5 * model.params.alpha_reg * 0.25 * w).epsilon(1e-12));
    CHECK(j.total == doctest::Approx(j.tracking + j.regularization));
    CHECK(traj.step_count() == 2);
}

TEST_SUITE_END();
