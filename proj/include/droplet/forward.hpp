#pragma once

#include <memory>
#include <span>
#include <vector>

#include "droplet/assembly.hpp"
#include "droplet/control.hpp"
#include "droplet/material.hpp"

namespace droplet {

class NewtonDivergedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class VelocityBc { NoSlip, Slip, None };

struct VelocityBcTable {
    VelocityBc bottom = VelocityBc::NoSlip;
    VelocityBc top = VelocityBc::Slip;
    VelocityBc left = VelocityBc::NoSlip;
    VelocityBc right = VelocityBc::NoSlip;

    VelocityBc for_tag(BoundaryTag tag) const;
};

/// Spatial discretization bundle: mesh, spaces, parameters, control geometry,
/// velocity constraints, and the constant matrices every step reuses.
/// Construction is the only mutating phase; afterwards the model is safe for
/// concurrent read-only use.
struct Model {
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<const FunctionSpace> p1;    // phase, potential, pressure
    std::shared_ptr<const FunctionSpace> p2v;   // velocity
    PhysicalParams params;
    ControlGrid grid;
    AdmissibleBox box;
    VelocityBcTable bcs;
    Vec2 gravity = Vec2::Zero();
    std::vector<BottomSubsegment> bottom_segs;
    std::vector<bool> ns_constrained;
    SparseMatrix mass_p1;

    int np() const { return p1->dof_count(); }
    int nv() const { return p2v->dof_count(); }
    int ns_dim() const { return nv() + np(); }
    int ch_dim() const { return 2 * np(); }
    int steps() const;

    double l2_norm(const Vector& p1_coeffs) const;
};

Model make_model(Mesh mesh, const PhysicalParams& params, const ControlGrid& grid,
                 const VelocityBcTable& bcs);

struct State {
    Field v;    // velocity, P2 vector
    Field p;    // pressure, P1, mean zero
    Field phi;  // phase, P1
    Field mu;   // chemical potential, P1
    double t = 0.0;
};

struct NewtonReport {
    std::vector<double> residuals;
    int iterations = 0;
    bool converged = false;
};

struct NewtonOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    int max_iter = 30;
    int max_halvings = 8;
};

struct Trajectory {
    std::vector<State> states;                  // m = 0..M
    std::vector<std::vector<double>> bu;        // per step (m-1), per patch
    std::vector<NewtonReport> newton;           // per step
    int step_count() const { return static_cast<int>(states.size()) - 1; }
};

/// Factorization caches reused across steps; one per concurrent sweep.
struct SolverWorkspace {
    DirectSolver ch;
    DirectSolver ns;
};

// Per-step assembly shared by the forward solve, the linearization and the
// adjoint. All rows are written in the tau-scaled operator form.

/// Coupled Cahn-Hilliard Jacobian; rows (CH1, CH2), columns (phi, mu).
/// phi_wpp supplies the W_+'' weight (current Newton iterate or the converged
/// state), phi_prev the lagged stabilization weight.
SparseMatrix assemble_ch_jacobian(const Model& model, const Field& phi_wpp, const Field& phi_prev);

Vector ch_residual(const Model& model, const Field& phi, const Field& mu, const Field& phi_prev,
                   const Field& v_prev, std::span<const double> bu);

/// Momentum + incompressibility system on (v, p) with boundary constraints
/// applied; the pressure nullspace is pinned at the first pressure dof.
SparseMatrix assemble_ns_system(const Model& model, const Field& phi, const Field& phi_prev,
                                const Field& mu, const Field& v_prev);

Vector assemble_ns_rhs(const Model& model, const Field& phi, const Field& phi_prev, const Field& mu,
                       const Field& v_prev);

// Scheme operations.

struct ChResult {
    Field phi;
    Field mu;
    NewtonReport report;
};

ChResult ch_step(const Model& model, const Field& phi_prev, const Field& mu_prev, const Field& v_prev,
                 std::span<const double> bu, SolverWorkspace& ws, const NewtonOptions& opts = {});

struct NsResult {
    Field v;
    Field p;
};

NsResult ns_step(const Model& model, const Field& phi, const Field& phi_prev, const Field& mu,
                 const Field& v_prev, SolverWorkspace& ws);

State step(const Model& model, const State& prev, const ControlVector& u, int m, SolverWorkspace& ws,
           NewtonReport* report = nullptr, const NewtonOptions& opts = {});

State initial_state(const Model& model, const Field& phi0, const Field& v0);

Trajectory simulate(const Model& model, const Field& phi0, const Field& v0, const ControlVector& u,
                    const NewtonOptions& opts = {});

/// Integral of the phase field (the conserved quantity).
double mass(const Field& phi);

// Energy diagnostics for the per-step inequality: free energy plus
// dissipation on the left, previous energy plus gravity work on the right,
// both sides with the wall energy of the step's control value.

struct EnergyRow {
    int m = 0;
    double time = 0.0;
    double kinetic = 0.0;
    double gl_bulk = 0.0;
    double boundary = 0.0;
    double diss_visc = 0.0;
    double diss_mu = 0.0;
    double diss_relax = 0.0;
    double gravity_work = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct EnergyReport {
    std::vector<EnergyRow> rows;
};

EnergyReport energy_report(const Model& model, const Trajectory& traj);

std::vector<bool> check_energy_inequality(const EnergyReport& report, double rel_tol = 1e-8);

}  // namespace droplet
