#pragma once

#include "droplet/forward.hpp"

namespace droplet {

struct TangentState {
    Field d_v, d_p, d_phi, d_mu;
};

struct AdjointState {
    Field p_v, p_p, p_phi, p_mu;
    int m = 0;
};

TangentState zero_tangent(const Model& model);
AdjointState zero_adjoint(const Model& model, int m);

/// Per-step blocks of the linearized scheme in the tau-scaled operator form.
/// Rows of a_ns/b_*/s_ns_* live in the (v,p) system, rows of j_ch/s_ch_* in
/// the coupled (CH1, CH2) system. s_* blocks couple the previous step's
/// direction; b_* blocks couple the same step's phase/potential direction
/// into the momentum rows. Velocity-constrained rows are dropped so the
/// constrained tangent rows reduce to the identity in a_ns.
struct StepBlocks {
    int m = 0;
    SparseMatrix a_ns;      // ns_dim x ns_dim, constraints applied
    SparseMatrix b_ns_phi;  // ns_dim x np
    SparseMatrix b_ns_mu;   // ns_dim x np
    SparseMatrix s_ns_v;    // ns_dim x ns_dim
    SparseMatrix s_ns_phi;  // ns_dim x np
    SparseMatrix j_ch;      // 2np x 2np, identical to the Newton Jacobian at the converged state
    SparseMatrix s_ch_v;    // 2np x ns_dim
    SparseMatrix s_ch_phi;  // 2np x np
};

StepBlocks build_step_blocks(const Model& model, const Trajectory& traj, int m);
std::vector<StepBlocks> build_all_blocks(const Model& model, const Trajectory& traj);

/// Control coupling of step m: the CH-system image of a control direction
/// (one value of B_m(du) per patch).
Vector control_coupling_ch(const Model& model, const Field& phi_prev, std::span<const double> du_patches);

/// One step of the linearized (tangent) scheme; du may be null when only the
/// initial data is perturbed.
TangentState tangent_step(const Model& model, const Trajectory& traj, int m, const TangentState& d_prev,
                          const ControlVector* du, SolverWorkspace& ws);

/// Tangent states for m = 0..M (entry 0 is the given initial perturbation).
std::vector<TangentState> tangent_sweep(const Model& model, const Trajectory& traj, const ControlVector* du,
                                        const TangentState* d0 = nullptr);

/// One backward step of the adjoint scheme; adj_next carries step m+1 values
/// (all zero at m = M). The momentum system is solved first with the
/// transposed step operator, then the coupled CH rows with the transposed
/// Newton Jacobian. next_blocks, when given, must be the blocks of step m+1.
AdjointState adjoint_step(const Model& model, const Trajectory& traj, int m, const AdjointState& adj_next,
                          const Field& phi_d, SolverWorkspace& ws, const StepBlocks* next_blocks = nullptr);

/// Adjoint states for m = 1..M (index m-1), swept backwards.
std::vector<AdjointState> adjoint_sweep(const Model& model, const Trajectory& traj, const Field& phi_d);

/// Reduced gradient of the tracking objective:
/// alpha B*B u plus the control adjoint of the wall-energy coupling.
ControlVector reduced_gradient(const Model& model, const ControlVector& u, const Trajectory& traj,
                               const std::vector<AdjointState>& adj);

// Objective pieces shared by the optimizer and the finite-difference checks.

struct ObjectiveValue {
    double total = 0.0;
    double tracking = 0.0;
    double regularization = 0.0;
};

ObjectiveValue objective_value(const Model& model, const Trajectory& traj, const ControlVector& u,
                               const Field& phi_d);

// Space-time applications of the linearization and its transpose, used by the
// transpose-identity checks. Directions and multipliers are indexed by step;
// tangent entry 0 is the initial perturbation.

struct ResidualImage {
    std::vector<Vector> ns;  // per step m = 1..M, size ns_dim
    std::vector<Vector> ch;  // per step m = 1..M, size 2 np
};

ResidualImage apply_linearization(const Model& model, const std::vector<StepBlocks>& blocks,
                                  const std::vector<TangentState>& d);

struct SlotImage {
    std::vector<Vector> v_slot;    // per m = 0..M, size ns_dim
    std::vector<Vector> phi_slot;  // per m = 0..M, size np
    std::vector<Vector> mu_slot;   // per m = 0..M, size np
};

SlotImage apply_linearization_transpose(const Model& model, const std::vector<StepBlocks>& blocks,
                                        const std::vector<AdjointState>& p);

// Finite-difference verification of the reduced gradient.

struct FdEntry {
    int direction = 0;
    double eps = 0.0;
    double fd_value = 0.0;
    double grad_dot = 0.0;
    double rel_error = 0.0;
};

/// Central-difference sweep for each direction; with surrogate = true the
/// forward model is bypassed and the pure quadratic penalty alpha/2 ||Bu||^2
/// is differentiated instead (phi0, v0, phi_d are then ignored).
std::vector<FdEntry> fd_gradient_report(const Model& model, const Field& phi0, const Field& v0,
                                        const ControlVector& u, const Field& phi_d,
                                        const std::vector<ControlVector>& directions,
                                        const std::vector<double>& epsilons, bool surrogate = false);

}  // namespace droplet
