#include "rpsv/interp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>

#include "rpsv/metric.hpp"
#include "rpsv/reconstruct.hpp"

namespace rpsv {

void InterpRequest::validate() const {
    if (a.size() != b.size()) throw InputError("interpolation endpoints disagree on point count");
    reparam.validate();
    reconstruct.validate();
    double prev = 0.0;
    for (double tau : taus) {
        if (!(tau >= 0.0 && tau <= 1.0)) throw InputError("tau values must lie in [0, 1]");
        if (tau < prev) throw InputError("tau values must be sorted");
        prev = tau;
    }
}

RpsvCurve linear_path_point(const RpsvCurve& q1, const RpsvCurve& q2, double tau) {
    if (q1.size() != q2.size()) throw InputError("RPSV curves disagree on point count");
    if (q1.exponent() != q2.exponent()) throw InputError("RPSV curves disagree on exponent");
    std::vector<Vec2> q(q1.size());
    for (std::size_t i = 0; i < q1.size(); ++i) q[i] = (1.0 - tau) * q1[i] + tau * q2[i];
    return RpsvCurve(std::move(q), q1.exponent());
}

std::vector<Contour> interpolate(const InterpRequest& req, unsigned threads) {
    req.validate();

    ContourSystem pair({req.a, req.b});
    pair.displace_origin(homogeneous_centroid(pair));
    const Vec2 origin = pair.origin_offset();

    const PairwiseResult aligned = optimize_pairwise(pair[0], pair[1], req.reparam, req.exponent);

    const VelocityField vel_a = differentiate(pair[0]);
    const VelocityField vel_b = differentiate(aligned.contour);
    const RpsvCurve qa = to_rpsv(pair[0].points(), vel_a, req.exponent);
    const RpsvCurve qb = to_rpsv(aligned.contour.points(), vel_b, req.exponent);

    std::vector<std::optional<Contour>> frames(req.taus.size());
    std::vector<std::string> failures(req.taus.size());
    auto run_one = [&](std::size_t f) {
        const double tau = req.taus[f];
        try {
            const RpsvCurve q = linear_path_point(qa, qb, tau);
            std::vector<double> hint(q.size());
            for (std::size_t i = 0; i < q.size(); ++i) {
                hint[i] = (1.0 - tau) * vel_a.speed[i] + tau * vel_b.speed[i];
            }
            frames[f] = reconstruct(q, req.reconstruct, hint).translated(origin);
        } catch (const std::exception& e) {
            failures[f] = "tau " + std::to_string(tau) + ": " + e.what();
        }
    };

    if (threads <= 1 || frames.size() <= 1) {
        for (std::size_t f = 0; f < frames.size(); ++f) run_one(f);
    } else {
        std::atomic<std::size_t> cursor{0};
        auto drain = [&] {
            for (std::size_t f = cursor.fetch_add(1); f < frames.size(); f = cursor.fetch_add(1)) {
                run_one(f);
            }
        };
        const unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(frames.size()));
        std::vector<std::thread> pool;
        pool.reserve(count - 1);
        for (unsigned t = 0; t + 1 < count; ++t) pool.emplace_back(drain);
        drain();
        for (std::thread& t : pool) t.join();
    }

    for (const std::string& msg : failures) {
        if (!msg.empty()) throw NumericError(msg);
    }
    std::vector<Contour> out;
    out.reserve(frames.size());
    for (auto& f : frames) out.push_back(std::move(*f));
    return out;
}

double dissimilarity(const Contour& a, const Contour& b, double exponent,
                     const ReparamOptions& opts) {
    ContourSystem pair({a, b});
    pair.displace_origin(homogeneous_centroid(pair));
    const PairwiseResult res = optimize_pairwise(pair[0], pair[1], opts, exponent);
    return res.energy_trace.back();
}

std::vector<std::size_t> flag_outliers(const ContourSystem& sys, double threshold_factor,
                                       const MeanOptions& opts, unsigned threads) {
    if (sys.count() < 3) throw InputError("outlier flagging needs at least 3 contours");
    const MeanResult mean = solve_double_optimization(sys, opts, threads);

    std::vector<double> dist(sys.count());
    for (std::size_t i = 0; i < sys.count(); ++i) {
        dist[i] = std::sqrt(distance_sq(mean.mean_rpsv, to_rpsv(mean.optimized[i], opts.exponent)));
    }
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    const double median =
        sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] > threshold_factor * median) flagged.push_back(i);
    }
    return flagged;
}

}  // namespace rpsv
