#include "droplet/material.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "droplet/assembly.hpp"

namespace droplet {

void PhysicalParams::finalize() {
    c_w = 3.0 / (2.0 * std::sqrt(2.0));
    sigma = c_w * sigma_lg;
    s_gamma = compute_s_gamma(sigma_lg);
    rho_min = rho_g;
    cos_theta_eq = std::cos(theta_eq_deg * std::numbers::pi / 180.0);
}

void PhysicalParams::validate() const {
    std::string errs;
    auto require = [&errs](bool ok, const char* msg) {
        if (!ok) {
            errs += errs.empty() ? "" : "; ";
            errs += msg;
        }
    };
    require(sigma_lg > 0.0, "sigma_lg must be positive");
    require(rho_l > 0.0, "rho_l must be positive");
    require(rho_g > 0.0, "rho_g must be positive");
    require(rho_l >= rho_g, "rho_l must be >= rho_g");
    require(eta_l > 0.0, "eta_l must be positive");
    require(eta_g > 0.0, "eta_g must be positive");
    require(eta_l >= eta_g, "eta_l must be >= eta_g");
    require(eps > 0.0, "eps must be positive");
    require(mobility > 0.0, "b must be positive");
    require(tau > 0.0, "tau must be positive");
    require(t_end >= 0.0, "T must be nonnegative");
    require(r_relax >= 0.0, "r must be nonnegative");
    require(g_mag >= 0.0, "g must be nonnegative");
    require(alpha_reg >= 0.0, "alpha must be nonnegative");
    if (!errs.empty()) throw std::invalid_argument("invalid parameters: " + errs);
}

double compute_s_gamma(double sigma_lg) {
    // max|theta''| = pi^2/8 and |cos(theta_eq) + Bu| <= 1 on the admissible set.
    return 0.5 * sigma_lg * (std::numbers::pi * std::numbers::pi / 8.0);
}

WellValues eval_well(double phi) {
    WellValues v;
    const double a = std::abs(phi);
    if (a <= 1.0) {
        v.w = 0.25 * (1.0 - phi * phi) * (1.0 - phi * phi);
        v.wp_p = phi * phi * phi;
        v.wp_pp = 3.0 * phi * phi;
    } else {
        v.w = (a - 1.0) * (a - 1.0);
        const double sgn = phi > 0.0 ? 1.0 : -1.0;
        v.wp_p = 3.0 * phi - 2.0 * sgn;
        v.wp_pp = 3.0;
    }
    v.wm_p = -phi;
    v.wm_pp = -1.0;
    return v;
}

ThetaValues eval_theta(double phi) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    ThetaValues v;
    if (phi <= -1.0) {
        v = {-0.5, 0.0, 0.0};
    } else if (phi >= 1.0) {
        v = {0.5, 0.0, 0.0};
    } else {
        v.th = 0.5 * std::sin(half_pi * phi);
        v.th_p = 0.5 * half_pi * std::cos(half_pi * phi);
        v.th_pp = -0.5 * half_pi * half_pi * std::sin(half_pi * phi);
    }
    return v;
}

double gamma_wall(const PhysicalParams& p, double phi, double bu) {
    return -p.sigma_lg * (p.cos_theta_eq + bu) * eval_theta(phi).th;
}

double gamma_wall_prime(const PhysicalParams& p, double phi, double bu) {
    return -p.sigma_lg * (p.cos_theta_eq + bu) * eval_theta(phi).th_p;
}

double gamma_wall_second(const PhysicalParams& p, double phi, double bu) {
    return -p.sigma_lg * (p.cos_theta_eq + bu) * eval_theta(phi).th_pp;
}

namespace {

// Monotone clamp s(phi): identity on [-1+delta, 1-delta], blended to the
// constant +-1 at |phi| = 1 and beyond. The quintic blend keeps s in C2 with
// s(+-1) = +-1 exactly; the cubic variant is C1. Both have slope zero at the
// pure-phase end, which is what keeps the laws inside [value(-1), value(+1)].
constexpr double kBlendWidth = 0.1;

struct ClampValues {
    double s, sp, spp;
};

ClampValues clamp_c2(double phi) {
    const double d = kBlendWidth;
    const double a = std::abs(phi), sgn = phi >= 0.0 ? 1.0 : -1.0;
    if (a <= 1.0 - d) return {phi, 1.0, 0.0};
    if (a >= 1.0) return {sgn, 0.0, 0.0};
    const double t = (a - (1.0 - d)) / d;  // in (0,1)
    // h(0)=0, h'(0)=1, h''(0)=0, h(1)=1, h'(1)=h''(1)=0 for unit-interval data.
    const double h = t + 4.0 * t * t * t - 7.0 * t * t * t * t + 3.0 * t * t * t * t * t;
    const double hp = 1.0 + 12.0 * t * t - 28.0 * t * t * t + 15.0 * t * t * t * t;
    const double hpp = 24.0 * t - 84.0 * t * t + 60.0 * t * t * t;
    return {sgn * ((1.0 - d) + d * h), hp, sgn * hpp / d};
}

ClampValues clamp_c1(double phi) {
    const double d = kBlendWidth;
    const double a = std::abs(phi), sgn = phi >= 0.0 ? 1.0 : -1.0;
    if (a <= 1.0 - d) return {phi, 1.0, 0.0};
    if (a >= 1.0) return {sgn, 0.0, 0.0};
    const double t = (a - (1.0 - d)) / d;
    const double h = t + t * t - t * t * t;
    const double hp = 1.0 + 2.0 * t - 3.0 * t * t;
    const double hpp = 2.0 - 6.0 * t;
    return {sgn * ((1.0 - d) + d * h), hp, sgn * hpp / d};
}

}  // namespace

double eval_rho(const PhysicalParams& p, double phi) {
    return 0.5 * (p.rho_l + p.rho_g) + 0.5 * (p.rho_l - p.rho_g) * clamp_c2(phi).s;
}

double eval_rho_prime(const PhysicalParams& p, double phi) {
    return 0.5 * (p.rho_l - p.rho_g) * clamp_c2(phi).sp;
}

double eval_rho_second(const PhysicalParams& p, double phi) {
    return 0.5 * (p.rho_l - p.rho_g) * clamp_c2(phi).spp;
}

double eval_eta(const PhysicalParams& p, double phi) {
    return 0.5 * (p.eta_l + p.eta_g) + 0.5 * (p.eta_l - p.eta_g) * clamp_c1(phi).s;
}

double eval_eta_prime(const PhysicalParams& p, double phi) {
    return 0.5 * (p.eta_l - p.eta_g) * clamp_c1(phi).sp;
}

double interface_profile(double z) { return std::tanh(z / std::sqrt(2.0)); }

Field initial_droplet(const Vec2& center, double radius, double eps, const FunctionSpace& space) {
    if (!(eps > 0.0)) throw std::invalid_argument("initial_droplet: eps must be positive");
    return interpolate(
        [&](const Vec2& x) { return interface_profile((radius - (x - center).norm()) / eps); }, space);
}

Vec2 gravity_vector(const PhysicalParams& p) {
    const double a = p.incline_deg * std::numbers::pi / 180.0;
    return p.g_mag * Vec2(std::sin(a), -std::cos(a));
}

}  // namespace droplet
