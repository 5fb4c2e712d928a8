#pragma once

#include <span>

#include <Eigen/Dense>

#include "droplet/adjoint.hpp"

// Monolithic dense re-implementation of one scheme step, independent of the
// library's assembly and solver paths: its own basis formulas, dense storage,
// dense LU, and a coupled Newton on all four fields at once. Shares only the
// mesh/dof layout, the quadrature tables, and the material laws it verifies
// against.
namespace droplet::oracle {

/// Dense unknown layout: [phi (np), mu (np), v (nv), p (np)].
int dense_dim(const Model& model);

struct DenseStepSystem {
    Eigen::VectorXd residual;
    Eigen::MatrixXd jacobian;       // d residual / d x
    Eigen::MatrixXd prev_coupling;  // d residual / d [phi_prev (np), v_prev (nv)]
};

DenseStepSystem assemble_dense_step(const Model& model, const Eigen::VectorXd& x, const Field& phi_prev,
                                    const Field& v_prev, std::span<const double> bu);

/// Control image e_u(du) in the dense residual layout.
Eigen::VectorXd dense_control_column(const Model& model, const Field& phi_prev,
                                     std::span<const double> du_patches);

/// Monolithic Newton on the full one-step system.
State oracle_step(const Model& model, const State& prev, std::span<const double> bu);

TangentState oracle_tangent_step(const Model& model, const State& prev, const State& cur,
                                 std::span<const double> bu, const TangentState& d_prev,
                                 std::span<const double> du_patches);

/// Adjoint of a single-step (M = 1) problem via the transposed monolithic
/// Jacobian.
AdjointState oracle_adjoint_single_step(const Model& model, const State& prev, const State& cur,
                                        std::span<const double> bu, const Field& phi_d);

/// Independent energy evaluation (both sides of the per-step inequality).
struct OracleEnergy {
    double lhs = 0.0;
    double rhs = 0.0;
};

OracleEnergy oracle_energy_row(const Model& model, const State& prev, const State& cur,
                               std::span<const double> bu);

}  // namespace droplet::oracle
