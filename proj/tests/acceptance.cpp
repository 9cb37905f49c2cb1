/**
 * @file acceptance.cpp
 * @brief End-to-end acceptance runs, one per shipped guarantee. Prints one
 *        PASS/FAIL line per criterion and exits nonzero if any fail.
 */

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rpsv/contour.hpp"
#include "rpsv/interp.hpp"
#include "rpsv/mean.hpp"
#include "rpsv/metric.hpp"
#include "rpsv/reconstruct.hpp"
#include "rpsv/reparam.hpp"
#include "rpsv/svg.hpp"

using namespace rpsv;

namespace {

struct Criterion {
    int number;
    std::string description;
    std::function<bool(std::string&)> run;
};

bool check(bool ok, std::string& detail, const std::string& msg) {
    if (!ok && detail.empty()) detail = msg;
    return ok;
}

double max_position_norm(const Contour& c) {
    double r = 0.0;
    for (const Vec2& p : c.points()) r = std::max(r, norm(p));
    return r;
}

// --- criterion 1 -----------------------------------------------------------

bool roundtrip_criterion(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937 rng(1001);
    bool ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        const Contour c(oracle::sample(oracle::random_blob(rng, 0.3), 256));
        const ReconstructResult rec = reconstruct_detailed(to_rpsv(c, 1.0), ReconstructOptions{});
        double err = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) err = std::max(err, norm(rec.contour[i] - c[i]));
        const double diameter = oracle::diameter(c.points());
        ok = check(err <= 1e-6 * diameter, detail,
                   "trial " + std::to_string(trial) + " error " + std::to_string(err / diameter)) &&
             ok;
        ok = check(rec.iterations <= 20, detail,
                   "trial " + std::to_string(trial) + " took " + std::to_string(rec.iterations) +
                       " iterations") &&
             ok;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return check(seconds < 10.0, detail, "runtime " + std::to_string(seconds) + " s") && ok;
}

// --- criterion 2 -----------------------------------------------------------

bool isometry_criterion(std::string& detail) {
    std::mt19937 rng(1002);
    const std::size_t m = 512;
    bool ok = true;
    for (int pair = 0; pair < 20; ++pair) {
        const oracle::FourierBlob a = oracle::random_blob(rng, 0.2, 3);
        const oracle::FourierBlob b = oracle::random_blob(rng, 0.2, 3, {0.2, -0.1});
        const double base = distance_sq(to_rpsv(Contour(oracle::sample(a, m)), 1.0),
                                        to_rpsv(Contour(oracle::sample(b, m)), 1.0));
        for (int w = 0; w < 5; ++w) {
            const oracle::SmoothWarp warp = oracle::random_warp(rng, 0.25, 3);
            const double moved = distance_sq(to_rpsv(Contour(oracle::sample_warped(a, warp, m)), 1.0),
                                             to_rpsv(Contour(oracle::sample_warped(b, warp, m)), 1.0));
            const double drift = std::abs(moved - base);
            ok = check(drift <= 1e-4 * base, detail,
                       "pair " + std::to_string(pair) + " drift " + std::to_string(drift / base)) &&
                 ok;
        }
    }
    return ok;
}

// --- criterion 3 -----------------------------------------------------------

bool gradient_criterion(std::string& detail) {
    std::mt19937 rng(1003);
    const std::size_t m = 512;
    const double dt = 1.0 / static_cast<double>(m);
    bool ok = true;
    for (int pair = 0; pair < 20; ++pair) {
        const oracle::FourierBlob blob_ref = oracle::random_blob(rng, 0.15);
        const oracle::FourierBlob blob_k = oracle::random_blob(rng, 0.15);
        const oracle::SmoothWarp warp = oracle::random_warp(rng, 0.2);

        const Contour ref(oracle::sample(blob_ref, m));
        const VelocityField ref_vel = differentiate(ref);
        const RpsvCurve q_ref = to_rpsv(ref.points(), ref_vel, 1.0);
        std::vector<double> gamma(m);
        for (std::size_t i = 0; i < m; ++i) gamma[i] = warp(static_cast<double>(i) / m);
        const Contour k(oracle::sample_warped(blob_k, warp, m));
        const VelocityField k_vel = differentiate(k);
        const std::vector<double> res = el_residual(ref, ref_vel, k, k_vel);

        double res_max = 0.0;
        for (double r : res) res_max = std::max(res_max, std::abs(r));

        // Central difference of the discrete pair energy with respect to each
        // per-point parameter; only the three stencil terms change.
        auto local_energy = [&](std::size_t j, double value) {
            auto pos = [&](std::size_t l) { return l == j ? blob_k(value) : blob_k(gamma[l]); };
            double acc = 0.0;
            for (std::size_t off = 0; off < 3; ++off) {
                const std::size_t l = (j + m - 1 + off) % m;
                const Vec2 p = pos(l);
                const double speed = norm(pos((l + 1) % m) - pos((l + m - 1) % m)) / (2.0 * dt);
                acc += norm_sq(q_ref[l] - p * std::sqrt(speed));
            }
            return acc * dt;
        };
        const double h = 1e-6 * dt;
        double worst = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double fd = (local_energy(j, gamma[j] + h) - local_energy(j, gamma[j] - h)) / (2.0 * h);
            const double gdot = warp.derivative(static_cast<double>(j) / m);
            const double normalized = fd * gdot / (dt * std::sqrt(ref_vel.speed[j] * k_vel.speed[j]));
            // Sign agreement wherever the field is resolvably nonzero.
            if (std::abs(res[j]) > 1e-3 * res_max) {
                ok = check(normalized * res[j] > 0.0, detail,
                           "sign flip at pair " + std::to_string(pair) + " index " +
                               std::to_string(j)) &&
                     ok;
            }
            worst = std::max(worst, std::abs(normalized - res[j]));
        }
        ok = check(worst <= 0.05 * res_max, detail,
                   "pair " + std::to_string(pair) + " magnitude gap " +
                       std::to_string(worst / res_max)) &&
             ok;
    }
    return ok;
}

// --- criterion 4 -----------------------------------------------------------

bool warp_recovery_criterion(std::string& detail) {
    const std::size_t m = 256;
    const Contour ref(oracle::sample(oracle::Circle{}, m));
    oracle::SmoothWarp warp;
    warp.amp = {0.1};
    warp.phase = {0.0};
    const Contour warped(oracle::sample_warped(oracle::Circle{}, warp, m));

    ReparamOptions opts;
    opts.max_iters = 60000;
    const PairwiseResult res = optimize_pairwise(ref, warped, opts);

    bool ok = check(res.energy_trace.back() <= 1e-4 * res.energy_trace.front(), detail,
                    "energy ratio " +
                        std::to_string(res.energy_trace.back() / res.energy_trace.front()));

    std::vector<double> dev(m);
    double mean_dev = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double angle = std::atan2(res.contour[i].y, res.contour[i].x);
        double d = angle - oracle::kTau * static_cast<double>(i) / static_cast<double>(m);
        d = std::remainder(d, oracle::kTau);
        dev[i] = d;
        mean_dev += d;
    }
    mean_dev /= static_cast<double>(m);
    double worst_arc = 0.0;
    for (double d : dev) worst_arc = std::max(worst_arc, std::abs(d - mean_dev));
    return check(worst_arc <= 1e-2, detail, "arc error " + std::to_string(worst_arc)) && ok;
}

// --- criterion 5 -----------------------------------------------------------

bool mean_identity_criterion(std::string& detail) {
    std::mt19937 rng(1005);
    const Contour c(oracle::sample(oracle::random_blob(rng, 0.25, 4, {0.6, -0.3}), 256));
    const double diameter = oracle::diameter(c.points());
    bool ok = true;
    for (std::size_t n : {2u, 5u}) {
        MeanOptions opts;
        opts.reparam.max_iters = 60000;
        const MeanResult result = solve_double_optimization(ContourSystem(std::vector<Contour>(n, c)), opts);
        double err = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) err = std::max(err, norm(result.mean_contour[i] - c[i]));
        ok = check(err <= 1e-6 * diameter, detail,
                   "n=" + std::to_string(n) + " error " + std::to_string(err / diameter)) &&
             ok;
        ok = check(result.centroid_displacement.x == 0.0 && result.centroid_displacement.y == 0.0,
                   detail, "nonzero displacement at n=" + std::to_string(n)) &&
             ok;
        ok = check(result.energy_trace.size() == 1, detail,
                   "n=" + std::to_string(n) + " used " + std::to_string(result.energy_trace.size()) +
                       " outer iterations") &&
             ok;
    }
    return ok;
}

// --- criterion 6 -----------------------------------------------------------

bool equivariance_criterion(std::string& detail) {
    std::mt19937 rng(1006);
    const std::size_t m = 256;
    std::vector<Contour> members;
    members.push_back(Contour(oracle::sample(oracle::Circle{1.0}, m)));
    members.push_back(Contour(oracle::sample(oracle::Ellipse{1.3, 0.8, {0.2, 0.1}}, m)));
    members.push_back(Contour(oracle::sample(oracle::random_blob(rng, 0.15), m)));

    const double angle = oracle::kTau / 12.0;
    const double scale = 2.0;
    const Vec2 shift{5.0, -3.0};
    auto transform = [&](Vec2 p) { return scale * rotate(p, angle) + shift; };

    std::vector<Contour> moved;
    for (const Contour& c : members) {
        std::vector<Vec2> pts(m);
        for (std::size_t i = 0; i < m; ++i) pts[i] = transform(c[i]);
        moved.push_back(Contour(pts));
    }

    MeanOptions opts;
    opts.reparam.max_iters = 60000;
    const MeanResult base = solve_double_optimization(ContourSystem(members), opts);
    const MeanResult mapped = solve_double_optimization(ContourSystem(moved), opts);

    std::vector<Vec2> expected(m);
    for (std::size_t i = 0; i < m; ++i) expected[i] = transform(base.mean_contour[i]);
    const double h = oracle::hausdorff(expected, mapped.mean_contour.points());
    const double diameter = scale * oracle::diameter(base.mean_contour.points());
    return check(h <= 1e-3 * diameter, detail, "relative hausdorff " + std::to_string(h / diameter));
}

// --- criterion 7 -----------------------------------------------------------

bool figure_criterion(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t m = 256;
    const Contour circle(oracle::sample(oracle::Circle{1.0}, m));
    const Contour ellipse(oracle::sample(oracle::Ellipse{1.4, 0.9}, m));

    MeanOptions opts;
    opts.reparam.max_iters = 60000;
    const MeanResult result = solve_double_optimization(ContourSystem({circle, ellipse}), opts);

    const double diameter = 2.8;
    auto ellipse_radius = [](double theta) {
        const double c = std::cos(theta), s = std::sin(theta);
        return 1.0 / std::sqrt(c * c / (1.4 * 1.4) + s * s / (0.9 * 0.9));
    };
    bool ok = true;
    const double margin = 5e-3 * diameter;
    for (const Vec2& p : result.mean_contour.points()) {
        const double rho = norm(p);
        const double re = ellipse_radius(std::atan2(p.y, p.x));
        ok = check(rho >= std::min(1.0, re) - margin && rho <= std::max(1.0, re) + margin, detail,
                   "mean leaves the band between the members") &&
             ok;
    }

    const double x = std::sqrt((1.0 - 1.0 / (0.9 * 0.9)) / (1.0 / (1.4 * 1.4) - 1.0 / (0.9 * 0.9)));
    const double y = std::sqrt(1.0 - x * x);
    for (const Vec2 cross_pt : {Vec2{x, y}, Vec2{-x, y}, Vec2{x, -y}, Vec2{-x, -y}}) {
        const double dist = oracle::point_to_closed_polyline(cross_pt, result.mean_contour.points());
        ok = check(dist > 1e-3 * diameter, detail,
                   "mean passes a member intersection (distance " + std::to_string(dist) + ")") &&
             ok;
    }

    std::vector<SvgPolygon> shapes;
    shapes.push_back({circle.points(), "#888888", 1.5});
    shapes.push_back({ellipse.points(), "#888888", 1.5});
    shapes.push_back({result.mean_contour.points(), "green", 2.5});
    write_svg("acceptance_fig1.svg", shapes);

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return check(seconds < 5.0, detail, "runtime " + std::to_string(seconds) + " s") && ok;
}

// --- criterion 8 -----------------------------------------------------------

bool linear_path_criterion(std::string& detail) {
    std::mt19937 rng(1008);
    const std::size_t m = 256;
    const RpsvCurve q1 = to_rpsv(Contour(oracle::sample(oracle::random_blob(rng, 0.25), m)), 1.0);
    const RpsvCurve q2 = to_rpsv(Contour(oracle::sample(oracle::random_blob(rng, 0.25), m)), 1.0);
    const double full = std::sqrt(distance_sq(q1, q2));
    bool ok = true;
    for (double tau : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        const double part = std::sqrt(distance_sq(q1, linear_path_point(q1, q2, tau)));
        ok = check(std::abs(part - tau * full) <= 1e-9 * full, detail,
                   "tau " + std::to_string(tau) + " deviation " +
                       std::to_string(std::abs(part - tau * full) / full)) &&
             ok;
    }
    return ok;
}

// --- criterion 9 -----------------------------------------------------------

bool system_consistency_criterion(std::string& detail) {
    std::mt19937 rng(1009);
    const std::size_t m = 256;
    std::vector<Contour> members;
    std::uniform_real_distribution<double> start(0.0, 1.0);
    for (double radius : {1.0, 1.2, 1.4}) {
        const oracle::SmoothWarp warp = oracle::random_warp(rng, 0.2);
        const double offset = start(rng);
        std::vector<Vec2> pts(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(m);
            pts[i] = oracle::Circle{radius}(warp(t + offset));
        }
        members.push_back(Contour(pts));
    }

    ReparamOptions opts;
    opts.max_iters = 60000;
    const SystemReparamResult aligned = optimize_system(ContourSystem(members), 0, opts);
    const RpsvCurve q_mean = rpsv_mean(aligned.system, 1.0);

    std::vector<double> hint(m, 0.0);
    for (const Contour& c : aligned.system.contours()) {
        const VelocityField vel = differentiate(c);
        for (std::size_t i = 0; i < m; ++i) hint[i] += vel.speed[i];
    }
    for (double& h : hint) h /= 3.0;
    const Contour mean = reconstruct(q_mean, ReconstructOptions{}, hint);
    const VelocityField mean_vel = differentiate(mean);
    const double mean_scale = max_position_norm(mean);

    bool ok = true;
    for (std::size_t k = 0; k < aligned.system.count(); ++k) {
        const Contour& member = aligned.system[k];
        const VelocityField vel = differentiate(member);
        double res_max = 0.0;
        for (double r : el_residual(mean, mean_vel, member, vel)) {
            res_max = std::max(res_max, std::abs(r));
        }
        const double bound =
            10.0 * opts.residual_tol * mean_scale * max_position_norm(member) / mean.dt();
        ok = check(res_max <= bound, detail,
                   "member " + std::to_string(k) + " residual " + std::to_string(res_max) +
                       " bound " + std::to_string(bound)) &&
             ok;
    }
    return ok;
}

// --- criterion 10 ----------------------------------------------------------

bool centroid_oracle_criterion(std::string& detail) {
    const std::size_t m = 256;
    const Contour a(oracle::sample(oracle::Circle{1.0}, m));
    const Contour b(oracle::sample(oracle::Circle{1.0, {0.5, 0.3}}, m));
    ContourSystem sys({a, b});
    sys.displace_origin(homogeneous_centroid(sys));

    ReparamOptions ropts;
    ropts.max_iters = 60000;
    const SystemReparamResult aligned = optimize_system(sys, 0, ropts);
    const RpsvCurve q_mean = rpsv_mean(aligned.system, 1.0);
    ReconstructOptions rec;
    rec.residual_tol = 1e-14;
    const Contour mean = reconstruct(q_mean, rec);
    const VelocityField mean_vel = differentiate(mean);

    const CentroidDisplacement cd = proper_centroid_displacement(aligned.system, mean, mean_vel);
    bool ok = check(!cd.identical_system, detail, "identical-system branch fired unexpectedly");

    const double diameter = 2.0 + std::sqrt(0.5 * 0.5 + 0.3 * 0.3);
    const double step = 1e-3 * diameter;
    Vec2 best{};
    double best_e = std::numeric_limits<double>::infinity();
    for (int ix = -25; ix <= 25; ++ix) {
        for (int iy = -25; iy <= 25; ++iy) {
            const Vec2 d = cd.displacement + Vec2{ix * step, iy * step};
            const double e = double_energy(aligned.system, mean, mean_vel, d);
            if (e < best_e) {
                best_e = e;
                best = d;
            }
        }
    }
    ok = check(std::abs(best.x - cd.displacement.x) <= step &&
                   std::abs(best.y - cd.displacement.y) <= step,
               detail, "grid argmin disagrees with the closed form") &&
         ok;

    const Vec2 full = proper_centroid_displacement_reference(aligned.system, mean, mean_vel);
    const double scale = std::max(norm(cd.displacement), diameter);
    ok = check(norm(cd.displacement - full) <= 1e-9 * scale, detail,
               "reference formula differs by " + std::to_string(norm(cd.displacement - full))) &&
         ok;
    return ok;
}

// --- criterion 11 ----------------------------------------------------------

bool outer_monotonicity_criterion(std::string& detail) {
    std::mt19937 rng(1011);
    const std::size_t m = 128;
    bool ok = true;
    for (int trial = 0; trial < 10; ++trial) {
        // Four delineations of one random object.
        std::vector<Contour> members;
        for (std::vector<Vec2>& pts : oracle::delineation_samples(rng, 4, m)) {
            members.push_back(Contour(std::move(pts)));
        }
        MeanOptions opts;
        opts.reparam.max_iters = 60000;
        const MeanResult result = solve_double_optimization(ContourSystem(members), opts);
        ok = check(result.converged, detail, "trial " + std::to_string(trial) + " not converged") && ok;
        ok = check(result.energy_trace.size() <= 50, detail,
                   "trial " + std::to_string(trial) + " used " +
                       std::to_string(result.energy_trace.size()) + " outer iterations") &&
             ok;
        for (std::size_t j = 1; j < result.energy_trace.size(); ++j) {
            ok = check(result.energy_trace[j] <= result.energy_trace[j - 1], detail,
                       "trial " + std::to_string(trial) + " energy rose at outer " +
                           std::to_string(j)) &&
                 ok;
        }
    }
    return ok;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "reconstruction round trip on 50 random star-shaped contours", roundtrip_criterion},
        {2, "distance invariance under common reparameterizations", isometry_criterion},
        {3, "stationarity residual matches the finite-difference energy gradient",
         gradient_criterion},
        {4, "synthetic warp recovery on the circle", warp_recovery_criterion},
        {5, "mean of identical contours is the contour", mean_identity_criterion},
        {6, "mean is equivariant under common similarity transforms", equivariance_criterion},
        {7, "circle/ellipse mean stays between the members and off their crossings",
         figure_criterion},
        {8, "representation distance is linear along the linear path", linear_path_criterion},
        {9, "system optimization is stationary against the mean", system_consistency_criterion},
        {10, "closed-form centroid displacement matches the grid search and the reference formula",
         centroid_oracle_criterion},
        {11, "outer energy decreases monotonically on random four-contour systems",
         outer_monotonicity_criterion},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        std::string detail;
        bool ok = false;
        const auto start = std::chrono::steady_clock::now();
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %2d: %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", c.number,
                    c.description.c_str(), seconds, detail.empty() ? "" : " -- ", detail.c_str());
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
