#include "droplet/isoline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace droplet {

namespace {

// Crossing points live on mesh edges; keying segments by the undirected edge
// makes chaining exact (both adjacent triangles compute the identical point).
using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

}  // namespace

std::vector<Polyline> zero_isoline(const Field& phi) {
    if (phi.space->kind() != SpaceKind::P1) throw std::invalid_argument("zero_isoline: P1 field expected");
    const Mesh& mesh = phi.space->mesh();

    // Sign convention: zero counts as positive, so each triangle cut by the
    // level set contributes exactly one segment between two edge crossings.
    auto positive = [&](int v) { return phi.coeffs[v] >= 0.0; };
    auto crossing = [&](int a, int b) -> Vec2 {
        const double fa = phi.coeffs[a], fb = phi.coeffs[b];
        const double t = fa / (fa - fb);
        return mesh.nodes[a] + t * (mesh.nodes[b] - mesh.nodes[a]);
    };

    std::map<EdgeKey, Vec2> points;
    std::vector<std::pair<EdgeKey, EdgeKey>> segments;
    for (const auto& tri : mesh.triangles) {
        std::vector<EdgeKey> cut;
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k], b = tri[(k + 1) % 3];
            if (positive(a) != positive(b)) {
                const EdgeKey key = edge_key(a, b);
                if (points.find(key) == points.end()) points[key] = crossing(a, b);
                cut.push_back(key);
            }
        }
        if (cut.size() == 2 && (points[cut[0]] - points[cut[1]]).norm() > 1e-14) {
            segments.emplace_back(cut[0], cut[1]);
        }
    }

    // Chain segments into polylines: walk open paths from odd-degree points
    // first, then closed loops.
    std::map<EdgeKey, std::vector<size_t>> incident;
    for (size_t s = 0; s < segments.size(); ++s) {
        incident[segments[s].first].push_back(s);
        incident[segments[s].second].push_back(s);
    }
    std::vector<bool> used(segments.size(), false);
    std::vector<Polyline> polylines;

    auto walk = [&](EdgeKey start) {
        Polyline line{points[start]};
        EdgeKey cur = start;
        while (true) {
            size_t next = segments.size();
            for (size_t s : incident[cur]) {
                if (!used[s]) {
                    next = s;
                    break;
                }
            }
            if (next == segments.size()) break;
            used[next] = true;
            cur = segments[next].first == cur ? segments[next].second : segments[next].first;
            line.push_back(points[cur]);
        }
        return line;
    };

    for (const auto& [key, segs] : incident) {
        if (segs.size() == 1 && !used[segs[0]]) polylines.push_back(walk(key));
    }
    for (const auto& [key, segs] : incident) {
        bool open = false;
        for (size_t s : segs)
            if (!used[s]) open = true;
        if (open) polylines.push_back(walk(key));
    }
    return polylines;
}

namespace {

// Area and first moment of the {phi > 0} part of one triangle (P1 phi is
// linear there, so the positive region is a polygon).
void positive_polygon(const Mesh& mesh, const std::array<int, 3>& tri, const Vector& f,
                      std::vector<Vec2>& poly) {
    poly.clear();
    for (int k = 0; k < 3; ++k) {
        const int a = tri[k], b = tri[(k + 1) % 3];
        const double fa = f[a], fb = f[b];
        if (fa >= 0.0) poly.push_back(mesh.nodes[a]);
        if ((fa >= 0.0) != (fb >= 0.0)) {
            const double t = fa / (fa - fb);
            poly.push_back(mesh.nodes[a] + t * (mesh.nodes[b] - mesh.nodes[a]));
        }
    }
}

struct PolyMoments {
    double area = 0.0;
    Vec2 moment = Vec2::Zero();
};

PolyMoments polygon_moments(const std::vector<Vec2>& poly) {
    PolyMoments m;
    if (poly.size() < 3) return m;
    const Vec2 o = poly[0];
    for (size_t k = 1; k + 1 < poly.size(); ++k) {
        const Vec2 u = poly[k] - o, v = poly[k + 1] - o;
        const double a = 0.5 * (u.x() * v.y() - u.y() * v.x());
        m.area += a;
        m.moment += a * (o + (u + v) / 3.0);
    }
    return m;
}

struct LineFit {
    double slope_at_wall = 0.0;
    bool ok = false;
};

// Least-squares x(y) = a + b y (+ c y^2 with three or more points); returns
// the slope at y = 0. The quadratic term removes the chord bias a straight
// fit would pick up from interface curvature across the band.
LineFit fit_cluster(const std::vector<Vec2>& pts) {
    LineFit fit;
    double ymin = 1e300, ymax = -1e300;
    for (const auto& p : pts) {
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    }
    if (pts.size() < 2 || ymax - ymin < 1e-12) return fit;
    const bool quadratic = pts.size() >= 3;
    const int n = quadratic ? 3 : 2;
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(n);
    for (const auto& p : pts) {
        Eigen::VectorXd row(n);
        row[0] = 1.0;
        row[1] = p.y();
        if (quadratic) row[2] = p.y() * p.y();
        ata += row * row.transpose();
        atb += row * p.x();
    }
    Eigen::VectorXd sol = ata.fullPivLu().solve(atb);
    fit.slope_at_wall = sol[1];
    fit.ok = true;
    return fit;
}

}  // namespace

DropletMetrics droplet_metrics(const Field& phi, BoundaryTag tag, double eps) {
    if (phi.space->kind() != SpaceKind::P1) throw std::invalid_argument("droplet_metrics: P1 field expected");
    if (tag != BoundaryTag::Bottom)
        throw std::invalid_argument("droplet_metrics: only the bottom wall is instrumented");
    const Mesh& mesh = phi.space->mesh();

    DropletMetrics out;
    PolyMoments total;
    std::vector<Vec2> poly;
    for (const auto& tri : mesh.triangles) {
        positive_polygon(mesh, tri, phi.coeffs, poly);
        const PolyMoments m = polygon_moments(poly);
        total.area += m.area;
        total.moment += m.moment;
    }
    out.area = total.area;
    if (total.area > 0.0) out.centroid = total.moment / total.area;

    // Contact angles from isoline points within the measurement band.
    const double band = 3.0 * eps;
    std::vector<Vec2> in_band;
    for (const auto& line : zero_isoline(phi))
        for (const auto& p : line)
            if (p.y() <= band + 1e-14) in_band.push_back(p);
    if (in_band.size() < 2) return out;

    std::sort(in_band.begin(), in_band.end(), [](const Vec2& a, const Vec2& b) { return a.x() < b.x(); });

    // Split into the two interface branches at the widest x gap; a single
    // cluster (droplet bridging one side) is fitted alone.
    size_t split = 0;
    double gap = 0.0;
    for (size_t i = 0; i + 1 < in_band.size(); ++i) {
        const double d = in_band[i + 1].x() - in_band[i].x();
        if (d > gap) {
            gap = d;
            split = i + 1;
        }
    }
    std::vector<std::vector<Vec2>> clusters;
    if (gap > band) {
        clusters.emplace_back(in_band.begin(), in_band.begin() + split);
        clusters.emplace_back(in_band.begin() + split, in_band.end());
    } else {
        clusters.push_back(in_band);
    }

    const double cx = out.centroid.x();
    for (const auto& cluster : clusters) {
        const LineFit fit = fit_cluster(cluster);
        if (!fit.ok) continue;
        double mean_x = 0.0;
        for (const auto& p : cluster) mean_x += p.x();
        mean_x /= static_cast<double>(cluster.size());
        // Interface tangent (slope, 1); the wall direction into the droplet is
        // +x at the left contact point and -x at the right one.
        const double beta = std::atan2(1.0, fit.slope_at_wall);
        if (mean_x <= cx)
            out.angle_left_deg = beta * 180.0 / std::numbers::pi;
        else
            out.angle_right_deg = 180.0 - beta * 180.0 / std::numbers::pi;
    }
    if (out.angle_left_deg && out.angle_right_deg)
        out.angle_deg = 0.5 * (*out.angle_left_deg + *out.angle_right_deg);
    else if (out.angle_left_deg)
        out.angle_deg = out.angle_left_deg;
    else if (out.angle_right_deg)
        out.angle_deg = out.angle_right_deg;
    return out;
}

}  // namespace droplet
