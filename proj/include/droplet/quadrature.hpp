#pragma once

#include <vector>

namespace droplet {

/// Symmetric quadrature rule on the reference triangle {L0+L1+L2=1}.
/// Weights sum to one; an integral is area * sum(w_q * f(x_q)).
struct TriQuadRule {
    struct Point {
        double l0, l1, l2;
        double w;
    };
    int degree = 0;
    std::vector<Point> points;
};

/// Gauss rule on [0,1] for edge (trace) integrals; weights sum to one.
struct EdgeQuadRule {
    struct Point {
        double t;
        double w;
    };
    int degree = 0;
    std::vector<Point> points;
};

/// Smallest tabulated rule exact for polynomials of the given total degree.
const TriQuadRule& tri_rule(int degree);
const EdgeQuadRule& edge_rule(int degree);

/// Quadrature degrees used throughout assembly. Polynomial forms use the
/// default; anything composed with a material law (W, rho, eta, theta) uses
/// the nonlinear degree so that composite integrands are resolved well below
/// solver tolerance.
inline constexpr int kQuadDefault = 4;
inline constexpr int kQuadNonlinear = 6;
inline constexpr int kEdgeQuadDefault = 3;
inline constexpr int kEdgeQuadNonlinear = 5;

}  // namespace droplet
