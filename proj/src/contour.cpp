#include "rpsv/contour.hpp"

#include <cmath>
#include <string>

namespace rpsv {

Contour::Contour(std::vector<Vec2> points) : pts_(std::move(points)) {
    if (pts_.size() < kMinPoints) {
        throw InputError("contour needs at least " + std::to_string(kMinPoints) + " points, got " +
                         std::to_string(pts_.size()));
    }
    for (std::size_t i = 0; i < pts_.size(); ++i) {
        const Vec2 d = pts_[(i + 1) % pts_.size()] - pts_[i];
        if (norm_sq(d) <= 0.0) {
            throw InputError("coincident consecutive contour points at index " + std::to_string(i));
        }
    }
}

Contour Contour::translated(Vec2 v) const {
    std::vector<Vec2> moved(pts_.size());
    for (std::size_t i = 0; i < pts_.size(); ++i) moved[i] = pts_[i] + v;
    return Contour(std::move(moved));
}

ContourSystem::ContourSystem(std::vector<Contour> contours, Vec2 origin_offset)
    : contours_(std::move(contours)), origin_offset_(origin_offset) {
    if (contours_.empty()) throw InputError("contour system is empty");
    const std::size_t m = contours_.front().size();
    for (const Contour& c : contours_) {
        if (c.size() != m) throw InputError("contour system members disagree on point count");
    }
}

void ContourSystem::displace_origin(Vec2 d) {
    for (Contour& c : contours_) c = c.translated(-d);
    origin_offset_ += d;
}

void ContourSystem::replace(std::size_t i, Contour c) {
    if (c.size() != points_per_contour()) throw InputError("replacement contour has wrong point count");
    contours_[i] = std::move(c);
}

Contour resample_uniform_arclength(std::span<const Vec2> raw_polygon, std::size_t point_count) {
    // Merge consecutive duplicates, including a repeated closing vertex.
    std::vector<Vec2> verts;
    verts.reserve(raw_polygon.size());
    for (const Vec2& p : raw_polygon) {
        if (verts.empty() || norm_sq(p - verts.back()) > 0.0) verts.push_back(p);
    }
    while (verts.size() > 1 && norm_sq(verts.back() - verts.front()) == 0.0) verts.pop_back();
    if (verts.size() < 3) throw InputError("degenerate contour: fewer than 3 distinct vertices");
    if (point_count < Contour::kMinPoints) {
        throw InputError("resample target must be at least " + std::to_string(Contour::kMinPoints));
    }

    const std::size_t e = verts.size();
    std::vector<double> cumulative(e + 1, 0.0);
    for (std::size_t i = 0; i < e; ++i) {
        cumulative[i + 1] = cumulative[i] + norm(verts[(i + 1) % e] - verts[i]);
    }
    const double perimeter = cumulative[e];
    if (!(perimeter > 0.0)) throw InputError("degenerate contour: zero perimeter");

    std::vector<Vec2> out(point_count);
    std::size_t edge = 0;
    for (std::size_t j = 0; j < point_count; ++j) {
        const double s = perimeter * static_cast<double>(j) / static_cast<double>(point_count);
        while (edge + 1 < e && cumulative[edge + 1] <= s) ++edge;
        const double len = cumulative[edge + 1] - cumulative[edge];
        const double frac = (s - cumulative[edge]) / len;
        out[j] = frac == 0.0 ? verts[edge] : lerp(verts[edge], verts[(edge + 1) % e], frac);
    }
    return Contour(std::move(out));
}

VelocityField differentiate(std::span<const Vec2> points, double dt) {
    const std::size_t m = points.size();
    VelocityField v;
    v.first.resize(m);
    v.speed.resize(m);
    v.tangent.resize(m);
    v.second.resize(m);
    const double inv_2dt = 1.0 / (2.0 * dt);
    const double inv_dt2 = 1.0 / (dt * dt);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& prev = points[(i + m - 1) % m];
        const Vec2& next = points[(i + 1) % m];
        v.first[i] = (next - prev) * inv_2dt;
        v.second[i] = (next - 2.0 * points[i] + prev) * inv_dt2;
        v.speed[i] = norm(v.first[i]);
        if (!(v.speed[i] > 0.0)) {
            throw NumericError("stationary point at index " + std::to_string(i));
        }
        v.tangent[i] = v.first[i] / v.speed[i];
    }
    return v;
}

VelocityField differentiate(const Contour& c) { return differentiate(c.points(), c.dt()); }

RpsvCurve::RpsvCurve(std::vector<Vec2> values, double exponent) : q_(std::move(values)), m_(exponent) {
    if (std::abs(m_ + 0.5) < 1e-12) throw InputError("singular exponent m = -1/2");
}

RpsvCurve to_rpsv(std::span<const Vec2> points, const VelocityField& vel, double exponent) {
    if (std::abs(exponent + 0.5) < 1e-12) throw InputError("singular exponent m = -1/2");
    const std::size_t m = points.size();
    std::vector<Vec2> q(m);
    if (exponent == 1.0) {
        for (std::size_t i = 0; i < m; ++i) q[i] = points[i] * std::sqrt(vel.speed[i]);
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            const double radius = norm(points[i]);
            if (radius == 0.0) {
                if (exponent <= 0.0) throw NumericError("origin on contour at index " + std::to_string(i));
                q[i] = Vec2{};
                continue;
            }
            q[i] = (std::pow(radius, exponent - 1.0) * std::sqrt(vel.speed[i])) * points[i];
        }
    }
    return RpsvCurve(std::move(q), exponent);
}

RpsvCurve to_rpsv(const Contour& c, double exponent) {
    return to_rpsv(c.points(), differentiate(c), exponent);
}

std::vector<double> christoffel_divergence(const VelocityField& v) {
    std::vector<double> gamma(v.first.size());
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        gamma[i] = dot(v.first[i], v.second[i]) / (v.speed[i] * v.speed[i]);
    }
    return gamma;
}

}  // namespace rpsv
