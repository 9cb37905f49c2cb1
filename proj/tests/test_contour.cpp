#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rpsv/contour.hpp"
#include "rpsv/metric.hpp"

using namespace rpsv;

namespace {

Contour unit_circle(std::size_t m) { return Contour(oracle::sample(oracle::Circle{}, m)); }

}  // namespace

TEST_CASE("contour construction validates point count and coincidence") {
    CHECK_THROWS_AS(Contour{std::vector<Vec2>(4, Vec2{1.0, 0.0})}, InputError);
    std::vector<Vec2> pts = oracle::sample(oracle::Circle{}, 16);
    pts[5] = pts[4];
    CHECK_THROWS_AS(Contour{pts}, InputError);
    CHECK_NOTHROW(unit_circle(8));
}

TEST_CASE("resampling the unit square to 8 points hits corners and edge midpoints") {
    const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const Contour c = resample_uniform_arclength(square, 8);
    const std::vector<Vec2> expected{{0, 0},   {0.5, 0}, {1, 0}, {1, 0.5},
                                     {1, 1},   {0.5, 1}, {0, 1}, {0, 0.5}};
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(c[i].x == doctest::Approx(expected[i].x).epsilon(1e-15));
        CHECK(c[i].y == doctest::Approx(expected[i].y).epsilon(1e-15));
    }
}

TEST_CASE("resampling an already equally spaced polygon returns the same points") {
    const std::vector<Vec2> square{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
    const Contour c = resample_uniform_arclength(square, 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(norm(c[i] - square[i]) <= 1e-12);
    }
}

TEST_CASE("resampling a fine polygon approximating a circle lands on the circle") {
    const std::vector<Vec2> fine = oracle::sample(oracle::Circle{}, 1000);
    const Contour c = resample_uniform_arclength(fine, 64);
    for (std::size_t k = 0; k < 64; ++k) {
        const double angle = oracle::kTau * static_cast<double>(k) / 64.0;
        const Vec2 expected{std::cos(angle), std::sin(angle)};
        CHECK(norm(c[k] - expected) <= 1e-3);
    }
}

TEST_CASE("resampling rejects degenerate input") {
    const std::vector<Vec2> collapsed{{1, 1}, {1, 1}, {1, 1}, {1, 1}};
    CHECK_THROWS_WITH_AS(resample_uniform_arclength(collapsed, 16),
                         doctest::Contains("degenerate contour"), InputError);
    const std::vector<Vec2> two{{0, 0}, {1, 0}, {0, 0}, {1, 0}};
    CHECK_THROWS_AS(resample_uniform_arclength(two, 4), InputError);
}

TEST_CASE("central differences of a uniform circle give uniform speed 2 pi + O(dt^2)") {
    for (std::size_t m : {64u, 128u}) {
        const Contour c = unit_circle(m);
        const VelocityField v = differentiate(c);
        const double dt = c.dt();
        for (std::size_t i = 0; i < m; ++i) {
            CHECK(v.speed[i] == doctest::Approx(oracle::kTau).epsilon(2.0 * dt * dt * oracle::kTau));
            CHECK(std::abs(norm(v.tangent[i]) - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("central differences match a dense resampling oracle at second order") {
    std::mt19937 rng(2024);
    const oracle::FourierBlob blob = oracle::random_blob(rng, 0.25);
    const std::size_t m = 128;
    const Contour coarse(oracle::sample(blob, m));
    const VelocityField v = differentiate(coarse);

    // Oracle: Richardson extrapolation of the same stencil at 8x resolution.
    const std::size_t fine_m = 8 * m;
    const std::vector<Vec2> fine = oracle::sample(blob, fine_m);
    const double fine_dt = 1.0 / static_cast<double>(fine_m);
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = 8 * i;
        const Vec2 d1 = (fine[(j + 1) % fine_m] - fine[(j + fine_m - 1) % fine_m]) / (2.0 * fine_dt);
        const Vec2 d2 = (fine[(j + 2) % fine_m] - fine[(j + fine_m - 2) % fine_m]) / (4.0 * fine_dt);
        const Vec2 oracle_first = (4.0 * d1 - d2) / 3.0;
        worst = std::max(worst, norm(v.first[i] - oracle_first));
        scale = std::max(scale, norm(oracle_first));
    }
    const double dt = coarse.dt();
    CHECK(worst <= 60.0 * dt * dt * scale);
}

TEST_CASE("differentiation rejects a fold-back stationary point") {
    // r_{i+1} == r_{i-1} makes the central difference vanish.
    std::vector<Vec2> pts = oracle::sample(oracle::Circle{}, 12);
    pts[2] = pts[0];
    bool threw = false;
    try {
        differentiate(Contour(pts));
    } catch (const NumericError& e) {
        threw = std::string(e.what()).find("stationary point") != std::string::npos;
    }
    CHECK(threw);
}

TEST_CASE("rpsv of a uniform unit circle is sqrt(2 pi) times the position") {
    const std::size_t m = 256;
    const Contour c = unit_circle(m);
    const VelocityField v = differentiate(c);
    const RpsvCurve q = to_rpsv(c, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        CHECK(norm(q[i] - std::sqrt(v.speed[i]) * c[i]) == 0.0);
        CHECK(norm(q[i]) == doctest::Approx(std::sqrt(oracle::kTau)).epsilon(1e-4));
    }
}

TEST_CASE("rpsv scales with exponent 3/2 under uniform scaling at m = 1") {
    std::mt19937 rng(7);
    const oracle::FourierBlob blob = oracle::random_blob(rng, 0.2);
    const std::size_t m = 64;
    const Contour c(oracle::sample(blob, m));
    const double alpha = 1.7;
    std::vector<Vec2> scaled(m);
    for (std::size_t i = 0; i < m; ++i) scaled[i] = alpha * c[i];
    const RpsvCurve q = to_rpsv(c, 1.0);
    const RpsvCurve q_scaled = to_rpsv(Contour(scaled), 1.0);
    const double factor = std::pow(alpha, 1.5);
    for (std::size_t i = 0; i < m; ++i) {
        CHECK(norm(q_scaled[i] - factor * q[i]) <= 1e-12 * norm(q_scaled[i]));
    }
}

TEST_CASE("rpsv at m = 0 keeps only the square root of the speed") {
    std::mt19937 rng(8);
    const Contour c(oracle::sample(oracle::random_blob(rng, 0.2, 3, {0.3, -0.2}), 64));
    const VelocityField v = differentiate(c);
    const RpsvCurve q = to_rpsv(c, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(norm(q[i]) == doctest::Approx(std::sqrt(v.speed[i])).epsilon(1e-12));
    }
}

TEST_CASE("rpsv rejects the singular exponent and an origin-crossing contour at m <= 0") {
    const Contour c = unit_circle(16);
    CHECK_THROWS_AS(to_rpsv(c, -0.5), InputError);
    std::vector<Vec2> through_origin = oracle::sample(oracle::Circle{1.0, {1.0, 0.0}}, 16);
    through_origin[8] = {0.0, 0.0};  // nearest point snapped onto the origin
    CHECK_THROWS_AS(to_rpsv(Contour(through_origin), 0.0), NumericError);
    CHECK_NOTHROW(to_rpsv(Contour(through_origin), 1.0));
}

TEST_CASE("rotation equivariance of the rpsv transform") {
    std::mt19937 rng(9);
    const Contour c(oracle::sample(oracle::random_blob(rng, 0.25), 128));
    const double angle = 0.83;
    std::vector<Vec2> rotated(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) rotated[i] = rotate(c[i], angle);
    const RpsvCurve q = to_rpsv(c, 1.0);
    const RpsvCurve q_rot = to_rpsv(Contour(rotated), 1.0);
    double scale = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) scale = std::max(scale, norm(q[i]));
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(norm(q_rot[i] - rotate(q[i], angle)) <= 1e-12 * scale);
    }
}

TEST_CASE("christoffel divergence vanishes for arc-length-uniform contours") {
    // Uniformly parameterized circle: exactly zero by symmetry.
    const Contour circle = unit_circle(128);
    for (double g : christoffel_divergence(differentiate(circle))) {
        CHECK(std::abs(g) <= 1e-11);  // pure stencil rounding, amplified by 1/dt^2
    }

    // Arc-length resampled ellipse: zero up to the stencil error, which must
    // shrink quadratically.
    auto gamma_max = [](std::size_t m) {
        const std::vector<Vec2> fine = oracle::sample(oracle::Ellipse{1.5, 1.0}, 4096);
        const Contour c = resample_uniform_arclength(fine, m);
        double worst = 0.0;
        for (double g : christoffel_divergence(differentiate(c))) worst = std::max(worst, std::abs(g));
        return worst;
    };
    const double coarse = gamma_max(128);
    const double fine = gamma_max(256);
    CHECK(coarse <= 0.1);
    CHECK(fine <= coarse / 2.5);
}

TEST_CASE("christoffel divergence matches the analytic log-speed derivative of a warp") {
    // Smooth periodic warp of the circle; the analytic rate of stretching is
    // gamma_dotdot / gamma_dot.
    oracle::SmoothWarp warp;
    warp.amp = {0.4};
    warp.phase = {0.0};
    const std::size_t m = 1024;
    const Contour c(oracle::sample_warped(oracle::Circle{}, warp, m));
    const std::vector<double> gamma = christoffel_divergence(differentiate(c));
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(m);
        const double analytic = -0.4 * oracle::kTau * std::sin(oracle::kTau * t) / warp.derivative(t);
        worst = std::max(worst, std::abs(gamma[i] - analytic));
    }
    CHECK(worst <= 2e-3);  // O(dt^2) with the warp's curvature constants
}

TEST_CASE("christoffel divergence equals the discrete derivative of log speed") {
    std::mt19937 rng(10);
    const oracle::FourierBlob blob = oracle::random_blob(rng, 0.25);
    const oracle::SmoothWarp warp = oracle::random_warp(rng, 0.25);
    const std::size_t m = 512;
    const Contour c(oracle::sample_warped(blob, warp, m));
    const VelocityField v = differentiate(c);
    const std::vector<double> gamma = christoffel_divergence(v);
    const double dt = c.dt();
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double fd =
            (std::log(v.speed[(i + 1) % m]) - std::log(v.speed[(i + m - 1) % m])) / (2.0 * dt);
        worst = std::max(worst, std::abs(gamma[i] - fd));
    }
    CHECK(worst <= 2e-2);  // both sides are O(dt^2) away from the smooth value
}
