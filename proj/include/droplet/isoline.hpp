#pragma once

#include <optional>
#include <vector>

#include "droplet/field.hpp"

namespace droplet {

using Polyline = std::vector<Vec2>;

/// Marching-triangles extraction of the zero level set of a P1 field, chained
/// into polylines. Every emitted point interpolates the field to zero exactly
/// (up to roundoff). Returns an empty list when the field has one sign.
std::vector<Polyline> zero_isoline(const Field& phi);

struct DropletMetrics {
    double area = 0.0;                    // area of {phi > 0}
    Vec2 centroid = Vec2::Zero();         // area-weighted centroid of {phi > 0}
    std::optional<double> angle_left_deg;
    std::optional<double> angle_right_deg;
    std::optional<double> angle_deg;      // mean of the available contact angles
};

/// Centroid of the positive phase and the contact angle against the tagged
/// wall, measured inside {phi > 0}. The angle comes from a least-squares fit
/// (quadratic in the wall distance, slope taken at the wall) of the isoline
/// points within a band of width 3*eps above the boundary; it is absent when
/// the isoline does not reach the band.
DropletMetrics droplet_metrics(const Field& phi, BoundaryTag tag, double eps);

}  // namespace droplet
