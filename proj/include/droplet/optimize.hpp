#pragma once

#include "droplet/adjoint.hpp"

namespace droplet {

struct OptimizerConfig {
    int max_iters = 40;
    double step0 = 1.0;        // initial step length
    double backtrack = 0.5;    // step shrink factor in (0,1)
    double armijo_c = 1e-4;    // sufficient-decrease constant in (0,1)
    double grad_tol = 1e-6;    // projected-gradient stationarity tolerance
    double step_min = 1e-12;
    bool barzilai_borwein = true;  // spectral initial step per iteration

    void validate() const;
};

struct IterationRecord {
    int iter = 0;
    double j = 0.0;
    double tracking = 0.0;
    double regularization = 0.0;
    double stationarity = 0.0;
    double step_length = 0.0;
    int forward_solves = 0;  // cumulative
};

struct OptResult {
    ControlVector u_opt;
    std::vector<IterationRecord> history;
    bool converged = false;
    int forward_solves = 0;
    Trajectory final_trajectory;
};

/// Simulates and evaluates the tracking + regularization objective.
std::pair<ObjectiveValue, Trajectory> reduced_objective(const Model& model, const Field& phi0,
                                                        const Field& v0, const ControlVector& u,
                                                        const Field& phi_d);

/// Projected-gradient descent with Armijo backtracking on the admissible box.
/// Accepted iterates are feasible and monotone in J; the loop stops when the
/// unit projected-gradient step is short enough or iterations run out.
OptResult optimize(const Model& model, const Field& phi0, const Field& v0, const ControlVector& u0,
                   const Field& phi_d, const OptimizerConfig& config);

/// Worst first-order violation of the box-constrained stationarity
/// conditions: |g| at interior coefficients, the infeasible gradient sign at
/// active bounds.
double evaluate_variational_inequality(const ControlVector& u, const ControlVector& grad,
                                       const AdmissibleBox& box, double active_tol = 1e-10);

}  // namespace droplet
