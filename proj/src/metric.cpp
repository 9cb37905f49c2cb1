#include "rpsv/metric.hpp"

namespace rpsv {

namespace {

void require_compatible(const RpsvCurve& a, const RpsvCurve& b) {
    if (a.size() != b.size()) throw InputError("RPSV curves disagree on point count");
    if (a.exponent() != b.exponent()) throw InputError("RPSV curves disagree on exponent");
}

}  // namespace

double inner_product(const RpsvCurve& q1, const RpsvCurve& q2) {
    require_compatible(q1, q2);
    double acc = 0.0;
    for (std::size_t i = 0; i < q1.size(); ++i) acc += dot(q1[i], q2[i]);
    return acc * q1.dt();
}

double distance_sq(const RpsvCurve& q1, const RpsvCurve& q2) {
    require_compatible(q1, q2);
    double acc = 0.0;
    for (std::size_t i = 0; i < q1.size(); ++i) acc += norm_sq(q1[i] - q2[i]);
    return acc * q1.dt();
}

double norm_sq(const RpsvCurve& q) { return inner_product(q, q); }

double sum_second_central_moments(const Contour& c, Vec2 center) {
    const std::size_t m = c.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double ds = 0.5 * norm(c.wrapped(static_cast<std::ptrdiff_t>(i) + 1) -
                                     c.wrapped(static_cast<std::ptrdiff_t>(i) - 1));
        acc += norm_sq(c[i] - center) * ds;
    }
    return acc;
}

double polygon_length(std::span<const Vec2> points) {
    double len = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        len += norm(points[(i + 1) % points.size()] - points[i]);
    }
    return len;
}

Vec2 arc_length_centroid(std::span<const Vec2> points) {
    Vec2 weighted{};
    double len = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec2& a = points[i];
        const Vec2& b = points[(i + 1) % points.size()];
        const double l = norm(b - a);
        weighted += l * 0.5 * (a + b);
        len += l;
    }
    if (!(len > 0.0)) throw NumericError("zero total length");
    return weighted / len;
}

Vec2 homogeneous_centroid(const ContourSystem& sys) {
    Vec2 weighted{};
    double total = 0.0;
    for (const Contour& c : sys.contours()) {
        const double len = polygon_length(c.points());
        weighted += len * arc_length_centroid(c.points());
        total += len;
    }
    if (!(total > 0.0)) throw NumericError("zero total length");
    return weighted / total;
}

}  // namespace rpsv
