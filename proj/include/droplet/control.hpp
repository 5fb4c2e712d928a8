#pragma once

#include <vector>

#include "droplet/field.hpp"

namespace droplet {

/// Tensor-product control basis: R characteristic functions in time times S
/// boundary patches on the bottom wall. Time intervals are half-open at the
/// left, (t_lo, t_hi]; patches are half-open at the right, [x_lo, x_hi).
struct ControlGrid {
    int r_intervals = 5;
    int s_patches = 10;
    double t_end = 5.0;
    double x_lo = 0.0;
    double x_hi = 1.0;

    double interval_length() const { return t_end / r_intervals; }
    double patch_length() const { return (x_hi - x_lo) / s_patches; }
    int size() const { return r_intervals * s_patches; }
    int index(int r, int s) const { return r * s_patches + s; }

    /// Patch containing x, or -1 off the controlled boundary.
    int patch_of(double x) const;
    /// Time interval containing t (right-closed), clamped to [0, R-1].
    int interval_of(double t) const;
    /// Measure of (t_{m-1}, t_m] cap interval r for step size tau.
    double overlap(int m, double tau, int r) const;
};

struct ControlVector {
    ControlGrid grid;
    Vector coeffs;

    ControlVector() = default;
    explicit ControlVector(const ControlGrid& g) : grid(g), coeffs(Vector::Zero(g.size())) {}

    double& at(int r, int s) { return coeffs[grid.index(r, s)]; }
    double at(int r, int s) const { return coeffs[grid.index(r, s)]; }
};

/// Box on cos(theta_eq) + Bu; the per-coefficient box on u follows from the
/// disjoint indicator basis.
struct AdmissibleBox {
    double lo = -0.9;
    double hi = 0.9;
    double cos_theta_eq = 0.0;

    double coeff_lo() const { return lo - cos_theta_eq; }
    double coeff_hi() const { return hi - cos_theta_eq; }
};

/// Pointwise control action Bu(t, x).
double apply_B(const ControlVector& u, double t, const Vec2& x);

/// Time average of Bu over step m, restricted to each patch:
/// returns S values (B_m u on patch s).
std::vector<double> bu_for_step(const ControlVector& u, int m, double tau);

/// Adjoint of B for data given as per-step per-patch integrals:
/// q_step_patch[m-1][s] = integral over patch s of q^m ds. The result is
/// (B* q)_rs = sum_m |step_m cap interval_r| * q_step_patch[m-1][s].
ControlVector apply_B_star(const ControlGrid& grid, const std::vector<std::vector<double>>& q_step_patch,
                           double tau);

ControlVector project_admissible(const ControlVector& u, const AdmissibleBox& box);

bool is_admissible(const ControlVector& u, const AdmissibleBox& box, double slack = 0.0);

/// ||Bu||^2 in L2(0,T; L2(bottom)); exact for the indicator basis.
double bu_norm_sq(const ControlVector& u);

/// Weight |interval_r| * |patch_s| of coefficient (r,s); B*B is diagonal with
/// these weights.
double bstarb_weight(const ControlGrid& grid, int r, int s);

/// Patch-aligned subdivision of the bottom boundary edges. Quadrature for
/// every control-dependent boundary term runs over these sub-segments, so the
/// forward assembly, the control adjoint, and the reduced gradient all use
/// the identical discrete pairing.
struct BottomSubsegment {
    int edge_index;   // into mesh.boundary_edges
    int patch;        // control patch, -1 outside the controlled range
    double t0, t1;    // edge-local parameter range
};

std::vector<BottomSubsegment> bottom_subsegments(const Mesh& mesh, const ControlGrid& grid);

}  // namespace droplet
