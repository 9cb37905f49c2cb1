#pragma once

/**
 * @file metric.hpp
 * @brief L2 inner product and distance on RPSV curves, arc-length moments
 *        and the homogeneous (arc-length weighted) centroid of a system.
 */

#include <span>

#include "rpsv/contour.hpp"

namespace rpsv {

/// Riemann sum of q1 . q2 over the closed parameter range,
/// sum_i q1_i . q2_i * dt. Throws InputError on mismatched size or exponent.
double inner_product(const RpsvCurve& q1, const RpsvCurve& q2);

/// Squared L2 distance, sum_i |q1_i - q2_i|^2 * dt.
double distance_sq(const RpsvCurve& q1, const RpsvCurve& q2);

/// Squared L2 norm, <q, q>.
double norm_sq(const RpsvCurve& q);

/// Arc-length quadrature of |r - center|^2 along the contour. The per-point
/// arc element is the half chord |r_{i+1} - r_{i-1}| / 2, which makes this
/// value agree with norm_sq(to_rpsv(c, 1)) when center is the basis origin.
double sum_second_central_moments(const Contour& c, Vec2 center);

/// Perimeter of the closed polygon through the points.
double polygon_length(std::span<const Vec2> points);

/// Exact line integral of the position along the closed polygon divided by
/// its length (edge-midpoint weighting). Invariant under refinement of the
/// polygon and under the parameter assignment of its vertices.
Vec2 arc_length_centroid(std::span<const Vec2> points);

/// Arc-length weighted centroid of the whole system:
/// (sum_i integral of R_i ds) / (sum_i L_i), in the system's current frame.
Vec2 homogeneous_centroid(const ContourSystem& sys);

}  // namespace rpsv
