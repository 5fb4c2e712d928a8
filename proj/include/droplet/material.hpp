#pragma once

#include <functional>

#include "droplet/field.hpp"

namespace droplet {

/// Physical and numerical scalars of the droplet scenario, with derived
/// quantities filled in by finalize().
struct PhysicalParams {
    double sigma_lg = 24.5;   // liquid-gas surface tension
    double rho_l = 1000.0;    // density of the liquid (droplet) phase, phi = +1
    double rho_g = 100.0;     // density of the gas phase, phi = -1
    double eta_l = 10.0;
    double eta_g = 1.0;
    double g_mag = 0.98;
    double incline_deg = -15.0;
    double r_relax = 0.35;    // contact-line relaxation coefficient, >= 0
    double eps = 2e-2;        // interface width
    double mobility = 2e-5;   // chemical-potential mobility b
    double theta_eq_deg = 90.0;
    double tau = 0.1;
    double t_end = 5.0;
    double alpha_reg = 1e-4;

    // Derived, set by finalize().
    double c_w = 0.0;         // 3/(2 sqrt 2) for the quartic well
    double sigma = 0.0;       // c_w * sigma_lg
    double s_gamma = 0.0;     // boundary stabilization coefficient
    double rho_min = 0.0;
    double cos_theta_eq = 0.0;

    void finalize();

    /// Throws std::invalid_argument naming every violated constraint.
    void validate() const;
};

/// Stabilization bound S_gamma >= 1/2 max|gamma''| evaluated with the
/// admissible-set bound |cos(theta_eq) + Bu| <= 1, so one value serves every
/// feasible control.
double compute_s_gamma(double sigma_lg);

/// Double-well values at one point: W itself plus the convex/concave split
/// derivatives used by the scheme (W' = Wp' + Wm', W'' likewise).
struct WellValues {
    double w;
    double wp_p;   // W_+'
    double wm_p;   // W_-'
    double wp_pp;  // W_+''
    double wm_pp;  // W_-''
};

WellValues eval_well(double phi);

/// Boundary interpolation theta and derivatives: theta = 1/2 sin(pi/2 phi)
/// clamped to +-1/2 outside [-1, 1].
struct ThetaValues {
    double th;
    double th_p;
    double th_pp;
};

ThetaValues eval_theta(double phi);

/// Wall energy density and derivatives for a given control value bu.
/// gamma(phi) = -sigma_lg (cos theta_eq + bu) theta(phi): with the droplet as
/// the phi = +1 phase, this orientation makes the equilibrium contact angle
/// measured inside the droplet satisfy cos(angle) = cos(theta_eq) + bu.
double gamma_wall(const PhysicalParams& p, double phi, double bu);
double gamma_wall_prime(const PhysicalParams& p, double phi, double bu);
double gamma_wall_second(const PhysicalParams& p, double phi, double bu);

/// Density/viscosity laws: linear in phi between the pure phases with a
/// monotone polynomial blend flattening them to the pure-phase values at
/// |phi| = 1, so rho stays in [rho_g, rho_l] and rho(+-1) is exact. rho is
/// C2 (quintic blend), eta is C1 (cubic blend).
double eval_rho(const PhysicalParams& p, double phi);
double eval_rho_prime(const PhysicalParams& p, double phi);
double eval_rho_second(const PhysicalParams& p, double phi);
double eval_eta(const PhysicalParams& p, double phi);
double eval_eta_prime(const PhysicalParams& p, double phi);

/// Equilibrium interface profile, Phi0(z) = tanh(z / sqrt 2).
double interface_profile(double z);

/// Cap-shaped droplet: +1 inside the circle of the given radius, -1 outside,
/// with a tanh transition of width eps.
Field initial_droplet(const Vec2& center, double radius, double eps, const FunctionSpace& space);

/// Gravity rotated by the plate inclination: g_mag * (sin a, -cos a).
Vec2 gravity_vector(const PhysicalParams& p);

}  // namespace droplet
