#pragma once

/**
 * @file contour.hpp
 * @brief Discrete closed planar contours, periodic differentiation and the
 *        position-rescaled-by-square-root-velocity (RPSV) representation.
 *
 * A contour is a closed curve sampled at M points at uniform parameter
 * spacing dt = T/M over a fixed parameter period T = 1. Index arithmetic is
 * circular; no duplicated closing point is stored.
 */

#include <cstddef>
#include <span>
#include <vector>

#include "rpsv/errors.hpp"
#include "rpsv/geometry.hpp"

namespace rpsv {

/// Closed discrete planar curve with uniform parameter spacing.
class Contour {
public:
    /// Shared parameter period of every contour.
    static constexpr double kPeriod = 1.0;
    /// Smallest point count for which the periodic second-difference stencils
    /// used downstream remain meaningful.
    static constexpr std::size_t kMinPoints = 8;

    /// Takes ownership of the sample points. Throws InputError if fewer than
    /// kMinPoints points are given or any two consecutive points (circularly)
    /// coincide.
    explicit Contour(std::vector<Vec2> points);

    std::size_t size() const { return pts_.size(); }
    double period() const { return kPeriod; }
    double dt() const { return kPeriod / static_cast<double>(pts_.size()); }

    const Vec2& operator[](std::size_t i) const { return pts_[i]; }
    const std::vector<Vec2>& points() const { return pts_; }

    /// Point at circular index (i may be any integer).
    const Vec2& wrapped(std::ptrdiff_t i) const {
        const auto m = static_cast<std::ptrdiff_t>(pts_.size());
        return pts_[static_cast<std::size_t>(((i % m) + m) % m)];
    }

    /// Parameter value of sample i.
    double param(std::size_t i) const { return static_cast<double>(i) * dt(); }

    /// Contour translated by v.
    Contour translated(Vec2 v) const;

private:
    std::vector<Vec2> pts_;
};

/// Per-point derivatives of a contour, from periodic central differences.
struct VelocityField {
    std::vector<Vec2> first;     ///< dr/dt
    std::vector<double> speed;   ///< |dr/dt|, positive everywhere
    std::vector<Vec2> tangent;   ///< unit tangent
    std::vector<Vec2> second;    ///< d2r/dt2
};

/// Per-point RPSV values q_i = |r_i|^m * u_i * sqrt(|dr/dt|_i) with
/// u_i = r_i/|r_i|. The exponent m = 1 gives q = r * sqrt(|dr/dt|).
class RpsvCurve {
public:
    /// Throws InputError for the singular exponent m = -1/2.
    RpsvCurve(std::vector<Vec2> values, double exponent);

    std::size_t size() const { return q_.size(); }
    double exponent() const { return m_; }
    double period() const { return Contour::kPeriod; }
    double dt() const { return Contour::kPeriod / static_cast<double>(q_.size()); }

    const Vec2& operator[](std::size_t i) const { return q_[i]; }
    const std::vector<Vec2>& values() const { return q_; }

private:
    std::vector<Vec2> q_;
    double m_;
};

/// A set of contours sharing point count and period, together with the
/// cumulative displacement of the working basis origin from the input frame
/// (positions stored here are relative to the current origin; adding
/// origin_offset maps them back to input coordinates).
class ContourSystem {
public:
    explicit ContourSystem(std::vector<Contour> contours, Vec2 origin_offset = {});

    std::size_t count() const { return contours_.size(); }
    std::size_t points_per_contour() const { return contours_.front().size(); }
    const Contour& operator[](std::size_t i) const { return contours_[i]; }
    const std::vector<Contour>& contours() const { return contours_; }

    Vec2 origin_offset() const { return origin_offset_; }

    /// Shifts every contour by -d and advances the origin by +d, leaving
    /// input-frame positions unchanged.
    void displace_origin(Vec2 d);

    /// Replaces contour i (point count must match).
    void replace(std::size_t i, Contour c);

private:
    std::vector<Contour> contours_;
    Vec2 origin_offset_;
};

/// Resamples a closed raw polygon to M points equally spaced in cumulative
/// arc length, preserving orientation and the first vertex. Consecutive
/// duplicate vertices in the input are merged. Throws InputError for fewer
/// than 3 distinct vertices, zero total length ("degenerate contour") or
/// M < Contour::kMinPoints.
Contour resample_uniform_arclength(std::span<const Vec2> raw_polygon, std::size_t point_count);

/// Periodic central differences of a raw closed point sequence:
/// first_i = (r_{i+1} - r_{i-1}) / (2 dt), second_i = (r_{i+1} - 2 r_i + r_{i-1}) / dt^2.
/// Throws NumericError("stationary point") if any speed vanishes.
VelocityField differentiate(std::span<const Vec2> points, double dt);

/// Central-difference derivatives of a contour.
VelocityField differentiate(const Contour& c);

/// RPSV transform about the current basis origin. Throws InputError for
/// m = -1/2 ("singular exponent") and NumericError("origin on contour") when
/// some |r_i| = 0 with m <= 0.
RpsvCurve to_rpsv(const Contour& c, double exponent = 1.0);

/// Same, with a precomputed velocity field for the contour's points.
RpsvCurve to_rpsv(std::span<const Vec2> points, const VelocityField& vel, double exponent);

/// Rate of elastic stretching along the contour,
/// Gamma_i = (dr/dt . d2r/dt2) / |dr/dt|^2 = d ln|dr/dt| / dt.
std::vector<double> christoffel_divergence(const VelocityField& v);

}  // namespace rpsv
