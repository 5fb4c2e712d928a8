#include "droplet/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace droplet {
namespace {

TriQuadRule make_tri_rule(int degree) {
    TriQuadRule rule;
    rule.degree = degree;
    auto orbit1 = [&rule](double w) { rule.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, w}); };
    auto orbit3 = [&rule](double a, double w) {
        const double b = 1.0 - 2.0 * a;
        rule.points.push_back({b, a, a, w});
        rule.points.push_back({a, b, a, w});
        rule.points.push_back({a, a, b, w});
    };
    auto orbit6 = [&rule](double a, double b, double w) {
        const double c = 1.0 - a - b;
        rule.points.push_back({a, b, c, w});
        rule.points.push_back({a, c, b, w});
        rule.points.push_back({b, a, c, w});
        rule.points.push_back({b, c, a, w});
        rule.points.push_back({c, a, b, w});
        rule.points.push_back({c, b, a, w});
    };

    switch (degree) {
        case 1:
            orbit1(1.0);
            break;
        case 2:
            // Midpoint rule.
            orbit3(0.5, 1.0 / 3.0);
            break;
        case 4:
            // Dunavant degree 4, 6 points.
            orbit3(0.445948490915965, 0.223381589678011);
            orbit3(0.091576213509771, 0.109951743655322);
            break;
        case 5:
            // Dunavant degree 5, 7 points.
            orbit1(0.225);
            orbit3(0.470142064105115, 0.132394152788506);
            orbit3(0.101286507323456, 0.125939180544827);
            break;
        case 6:
            // Dunavant degree 6, 12 points.
            orbit3(0.249286745170910, 0.116786275726379);
            orbit3(0.063089014491502, 0.050844906370207);
            orbit6(0.053145049844816, 0.310352451033785, 0.082851075618374);
            break;
        default:
            throw std::invalid_argument("tri_rule: no rule tabulated for degree " + std::to_string(degree));
    }
    return rule;
}

EdgeQuadRule make_edge_rule(int npoints) {
    EdgeQuadRule rule;
    rule.degree = 2 * npoints - 1;
    // Gauss-Legendre nodes on [-1,1], mapped to [0,1]; weights rescaled to sum 1.
    std::vector<double> x, w;
    switch (npoints) {
        case 1:
            x = {0.0};
            w = {2.0};
            break;
        case 2:
            x = {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
            w = {1.0, 1.0};
            break;
        case 3:
            x = {-std::sqrt(3.0 / 5.0), 0.0, std::sqrt(3.0 / 5.0)};
            w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
            break;
        case 4: {
            const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
            const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
            x = {-b, -a, a, b};
            w = {wb, wa, wa, wb};
            break;
        }
        default:
            throw std::invalid_argument("edge_rule: unsupported point count");
    }
    for (size_t i = 0; i < x.size(); ++i) rule.points.push_back({0.5 * (x[i] + 1.0), 0.5 * w[i]});
    return rule;
}

}  // namespace

const TriQuadRule& tri_rule(int degree) {
    static const TriQuadRule r1 = make_tri_rule(1);
    static const TriQuadRule r2 = make_tri_rule(2);
    static const TriQuadRule r4 = make_tri_rule(4);
    static const TriQuadRule r5 = make_tri_rule(5);
    static const TriQuadRule r6 = make_tri_rule(6);
    if (degree <= 1) return r1;
    if (degree <= 2) return r2;
    if (degree <= 4) return r4;
    if (degree <= 5) return r5;
    if (degree <= 6) return r6;
    throw std::invalid_argument("tri_rule: no rule tabulated for degree " + std::to_string(degree));
}

const EdgeQuadRule& edge_rule(int degree) {
    static const EdgeQuadRule g1 = make_edge_rule(1);
    static const EdgeQuadRule g2 = make_edge_rule(2);
    static const EdgeQuadRule g3 = make_edge_rule(3);
    static const EdgeQuadRule g4 = make_edge_rule(4);
    if (degree <= 1) return g1;
    if (degree <= 3) return g2;
    if (degree <= 5) return g3;
    if (degree <= 7) return g4;
    throw std::invalid_argument("edge_rule: no rule tabulated for degree " + std::to_string(degree));
}

}  // namespace droplet
