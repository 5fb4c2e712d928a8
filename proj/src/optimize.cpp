#include "droplet/optimize.hpp"

#include <cmath>
#include <stdexcept>

namespace droplet {

void OptimizerConfig::validate() const {
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("optimizer: backtrack in (0,1)");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw std::invalid_argument("optimizer: armijo_c in (0,1)");
    if (!(grad_tol > 0.0)) throw std::invalid_argument("optimizer: grad_tol positive");
    if (!(step0 > 0.0)) throw std::invalid_argument("optimizer: step0 positive");
    if (max_iters < 0) throw std::invalid_argument("optimizer: max_iters nonnegative");
}

std::pair<ObjectiveValue, Trajectory> reduced_objective(const Model& model, const Field& phi0,
                                                        const Field& v0, const ControlVector& u,
                                                        const Field& phi_d) {
    Trajectory traj = simulate(model, phi0, v0, u);
    ObjectiveValue j = objective_value(model, traj, u, phi_d);
    return {j, std::move(traj)};
}

OptResult optimize(const Model& model, const Field& phi0, const Field& v0, const ControlVector& u0,
                   const Field& phi_d, const OptimizerConfig& config) {
    config.validate();
    const AdmissibleBox& box = model.box;

    OptResult result;
    ControlVector u = project_admissible(u0, box);
    auto [j, traj] = reduced_objective(model, phi0, v0, u, phi_d);
    result.forward_solves = 1;

    auto adj = adjoint_sweep(model, traj, phi_d);
    ControlVector grad = reduced_gradient(model, u, traj, adj);

    auto stationarity = [&](const ControlVector& uu, const ControlVector& g) {
        ControlVector probe = uu;
        probe.coeffs -= g.coeffs;
        probe = project_admissible(probe, box);
        return (uu.coeffs - probe.coeffs).norm();
    };

    double step = config.step0;
    ControlVector u_prev(u.grid);
    ControlVector grad_prev(u.grid);
    bool have_prev = false;

    double stat = stationarity(u, grad);
    result.history.push_back({0, j.total, j.tracking, j.regularization, stat, 0.0, result.forward_solves});

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        if (stat <= config.grad_tol) {
            result.converged = true;
            break;
        }

        // Spectral (Barzilai-Borwein) initial step, safeguarded by Armijo.
        if (config.barzilai_borwein && have_prev) {
            const Vector du = u.coeffs - u_prev.coeffs;
            const Vector dg = grad.coeffs - grad_prev.coeffs;
            const double denom = du.dot(dg);
            if (denom > 1e-300) step = std::min(std::max(du.dot(du) / denom, 1e-8), 1e8);
        }

        bool accepted = false;
        double step_try = step;
        ControlVector u_next(u.grid);
        ObjectiveValue j_next;
        Trajectory traj_next;
        while (step_try >= config.step_min) {
            u_next = u;
            u_next.coeffs -= step_try * grad.coeffs;
            u_next = project_admissible(u_next, box);
            const double decrease = grad.coeffs.dot(u.coeffs - u_next.coeffs);
            auto [j_try, traj_try] = reduced_objective(model, phi0, v0, u_next, phi_d);
            ++result.forward_solves;
            if (j_try.total <= j.total - config.armijo_c * decrease) {
                accepted = true;
                j_next = j_try;
                traj_next = std::move(traj_try);
                break;
            }
            step_try *= config.backtrack;
        }
        if (!accepted) break;  // line search exhausted; report best iterate

        u_prev = u;
        grad_prev = grad;
        have_prev = true;
        u = std::move(u_next);
        j = j_next;
        traj = std::move(traj_next);
        step = step_try;

        adj = adjoint_sweep(model, traj, phi_d);
        grad = reduced_gradient(model, u, traj, adj);
        stat = stationarity(u, grad);
        result.history.push_back(
            {iter, j.total, j.tracking, j.regularization, stat, step_try, result.forward_solves});
        if (stat <= config.grad_tol) {
            result.converged = true;
            break;
        }
    }

    result.u_opt = std::move(u);
    result.final_trajectory = std::move(traj);
    return result;
}

double evaluate_variational_inequality(const ControlVector& u, const ControlVector& grad,
                                       const AdmissibleBox& box, double active_tol) {
    const double lo = box.coeff_lo(), hi = box.coeff_hi();
    double worst = 0.0;
    for (int i = 0; i < u.coeffs.size(); ++i) {
        const double ui = u.coeffs[i], gi = grad.coeffs[i];
        double violation;
        if (ui <= lo + active_tol)
            violation = std::max(0.0, -gi);  // at the lower bound the gradient must push down
        else if (ui >= hi - active_tol)
            violation = std::max(0.0, gi);   // at the upper bound it must push up
        else
            violation = std::abs(gi);
        worst = std::max(worst, violation);
    }
    return worst;
}

}  // namespace droplet
