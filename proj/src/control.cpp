#include "droplet/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "droplet/mesh.hpp"

namespace droplet {

int ControlGrid::patch_of(double x) const {
    if (x < x_lo - 1e-12 || x > x_hi + 1e-12) return -1;
    // Right-open patches; the snap keeps a point computed as a patch boundary
    // on its right patch despite roundoff. The wall endpoint stays on the
    // last patch.
    const double raw = (x - x_lo) / patch_length();
    const int s = static_cast<int>(std::floor(raw + 1e-9));
    return std::clamp(s, 0, s_patches - 1);
}

int ControlGrid::interval_of(double t) const {
    // Right-closed intervals (r*L, (r+1)*L].
    const double l = interval_length();
    const int r = static_cast<int>(std::ceil(t / l - 1e-9)) - 1;
    return std::clamp(r, 0, r_intervals - 1);
}

double ControlGrid::overlap(int m, double tau, int r) const {
    const double t0 = (m - 1) * tau, t1 = m * tau;
    const double l = interval_length();
    const double a = std::max(t0, r * l), b = std::min(t1, (r + 1) * l);
    return std::max(0.0, b - a);
}

double apply_B(const ControlVector& u, double t, const Vec2& x) {
    if (std::abs(x.y()) > 1e-12) return 0.0;
    const int s = u.grid.patch_of(x.x());
    if (s < 0) return 0.0;
    const int r = u.grid.interval_of(t);
    return u.at(r, s);
}

std::vector<double> bu_for_step(const ControlVector& u, int m, double tau) {
    const ControlGrid& g = u.grid;
    std::vector<double> values(g.s_patches, 0.0);
    for (int r = 0; r < g.r_intervals; ++r) {
        const double o = g.overlap(m, tau, r);
        if (o <= 0.0) continue;
        for (int s = 0; s < g.s_patches; ++s) values[s] += o * u.at(r, s);
    }
    for (double& v : values) v /= tau;
    return values;
}

ControlVector apply_B_star(const ControlGrid& grid, const std::vector<std::vector<double>>& q_step_patch,
                           double tau) {
    ControlVector out(grid);
    const int steps = static_cast<int>(q_step_patch.size());
    for (int m = 1; m <= steps; ++m) {
        const auto& q = q_step_patch[m - 1];
        if (static_cast<int>(q.size()) != grid.s_patches)
            throw std::invalid_argument("apply_B_star: patch count mismatch");
        for (int r = 0; r < grid.r_intervals; ++r) {
            const double o = grid.overlap(m, tau, r);
            if (o <= 0.0) continue;
            for (int s = 0; s < grid.s_patches; ++s) out.at(r, s) += o * q[s];
        }
    }
    return out;
}

ControlVector project_admissible(const ControlVector& u, const AdmissibleBox& box) {
    ControlVector out = u;
    const double lo = box.coeff_lo(), hi = box.coeff_hi();
    for (int i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] = std::clamp(out.coeffs[i], lo, hi);
    return out;
}

bool is_admissible(const ControlVector& u, const AdmissibleBox& box, double slack) {
    const double lo = box.coeff_lo() - slack, hi = box.coeff_hi() + slack;
    for (int i = 0; i < u.coeffs.size(); ++i)
        if (u.coeffs[i] < lo || u.coeffs[i] > hi) return false;
    return true;
}

double bu_norm_sq(const ControlVector& u) {
    double total = 0.0;
    for (int r = 0; r < u.grid.r_intervals; ++r)
        for (int s = 0; s < u.grid.s_patches; ++s)
            total += u.at(r, s) * u.at(r, s) * bstarb_weight(u.grid, r, s);
    return total;
}

double bstarb_weight(const ControlGrid& grid, int, int) {
    return grid.interval_length() * grid.patch_length();
}

std::vector<BottomSubsegment> bottom_subsegments(const Mesh& mesh, const ControlGrid& grid) {
    std::vector<BottomSubsegment> segs;
    for (int e = 0; e < static_cast<int>(mesh.boundary_edges.size()); ++e) {
        const auto& be = mesh.boundary_edges[e];
        if (be.tag != BoundaryTag::Bottom) continue;
        const double xa = mesh.nodes[be.v[0]].x(), xb = mesh.nodes[be.v[1]].x();
        const double x0 = std::min(xa, xb), x1 = std::max(xa, xb);
        // Patch boundaries strictly inside the edge split it.
        std::vector<double> cuts{x0};
        const double pl = grid.patch_length();
        const int k0 = static_cast<int>(std::ceil((x0 - grid.x_lo) / pl));
        for (int k = k0; grid.x_lo + k * pl < x1 - 1e-14; ++k) {
            const double xc = grid.x_lo + k * pl;
            if (xc > x0 + 1e-14) cuts.push_back(xc);
        }
        cuts.push_back(x1);
        for (size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double mid = 0.5 * (cuts[c] + cuts[c + 1]);
            BottomSubsegment seg;
            seg.edge_index = e;
            seg.patch = grid.patch_of(mid);
            // Edge-local parameters follow the stored edge orientation.
            seg.t0 = (cuts[c] - xa) / (xb - xa);
            seg.t1 = (cuts[c + 1] - xa) / (xb - xa);
            if (seg.t0 > seg.t1) std::swap(seg.t0, seg.t1);
            segs.push_back(seg);
        }
    }
    return segs;
}

}  // namespace droplet
