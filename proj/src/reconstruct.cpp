#include "rpsv/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rpsv {

namespace {

constexpr std::size_t kDenseFallbackLimit = 2048;

/// Plain tridiagonal elimination without pivoting; returns false on a
/// degenerate pivot.
bool thomas_solve(std::span<const double> diag, std::span<const double> sub,
                  std::span<const double> sup, std::span<const double> rhs,
                  std::vector<double>& x, double pivot_floor) {
    const std::size_t n = diag.size();
    std::vector<double> c(n, 0.0);
    x.assign(n, 0.0);
    double piv = diag[0];
    if (std::abs(piv) <= pivot_floor) return false;
    c[0] = sup[0] / piv;
    x[0] = rhs[0] / piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag[i] - sub[i] * c[i - 1];
        if (std::abs(piv) <= pivot_floor) return false;
        c[i] = sup[i] / piv;
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
    return true;
}

double cyclic_residual(const CyclicBandSystem& s, std::span<const double> x) {
    const std::size_t n = s.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ax = s.sub[i] * x[(i + n - 1) % n] + s.diag[i] * x[i] + s.sup[i] * x[(i + 1) % n];
        worst = std::max(worst, std::abs(ax - s.rhs[i]));
    }
    return worst;
}

/// Gaussian elimination with partial pivoting; consumes its inputs.
bool dense_lu_solve(std::vector<double> a, std::vector<double> b, std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        }
        if (a[piv * n + col] == 0.0) return false;
        if (piv != col) {
            for (std::size_t k = col; k < n; ++k) std::swap(a[piv * n + k], a[col * n + k]);
            std::swap(b[piv], b[col]);
        }
        const double d = a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r * n + col] / d;
            if (factor == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) a[r * n + k] -= factor * a[col * n + k];
            b[r] -= factor * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t k = i + 1; k < n; ++k) acc -= a[i * n + k] * x[k];
        x[i] = acc / a[i * n + i];
    }
    return true;
}

/// Densifies the cyclic band system and solves it.
bool dense_solve(const CyclicBandSystem& s, std::vector<double>& x) {
    const std::size_t n = s.size();
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        a[i * n + i] = s.diag[i];
        a[i * n + (i + 1) % n] = s.sup[i];
        a[i * n + (i + n - 1) % n] = s.sub[i];
    }
    return dense_lu_solve(std::move(a), s.rhs, x);
}

/// Ridge-regularized Gauss-Newton step anchored at the previous rays:
/// minimizes |A x - b|^2 + lambda^2 |x - anchor|^2. Used when the band
/// system carries quasi-null directions (the zero-diagonal exponent-0 form),
/// which a direct solve would amplify into garbage.
bool ridge_solve(const CyclicBandSystem& s, std::span<const double> anchor, double lambda,
                 std::vector<double>& x) {
    const std::size_t n = s.size();
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        a[i * n + i] = s.diag[i];
        a[i * n + (i + 1) % n] = s.sup[i];
        a[i * n + (i + n - 1) % n] = s.sub[i];
    }
    std::vector<double> normal(n * n, 0.0);
    std::vector<double> rhs(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k_col = 0; k_col < n; ++k_col) {
            double acc = 0.0;
            for (std::size_t i : {j, (j + 1) % n, (j + n - 1) % n}) {
                acc += a[i * n + j] * a[i * n + k_col];
            }
            normal[j * n + k_col] = acc;
        }
        normal[j * n + j] += lambda * lambda;
        double acc = 0.0;
        for (std::size_t i : {j, (j + 1) % n, (j + n - 1) % n}) acc += a[i * n + j] * s.rhs[i];
        rhs[j] = acc + lambda * lambda * anchor[j];
    }
    return dense_lu_solve(std::move(normal), std::move(rhs), x);
}

double scale_of(const CyclicBandSystem& s) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        m = std::max({m, std::abs(s.diag[i]), std::abs(s.sub[i]), std::abs(s.sup[i])});
    }
    return m;
}

}  // namespace

void ReconstructOptions::validate() const {
    if (max_newton_iters <= 0) throw InputError("max_newton_iters must be positive");
    if (!(residual_tol > 0.0)) throw InputError("residual_tol must be positive");
}

std::vector<Vec2> direction_field(const RpsvCurve& q) {
    std::vector<Vec2> u(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double mag = norm(q[i]);
        if (!(mag > 0.0)) throw NumericError("ray through origin at index " + std::to_string(i));
        u[i] = q[i] / mag;
    }
    return u;
}

CyclicBandSystem assemble_newton_system_general(const RpsvCurve& q, std::span<const double> guess,
                                                double exponent) {
    if (std::abs(exponent + 0.5) < 1e-12) throw InputError("singular exponent m = -1/2");
    if (guess.size() != q.size()) throw InputError("guess size disagrees with curve");
    const std::size_t n = q.size();
    const double dt = q.dt();
    const std::vector<Vec2> u = direction_field(q);

    std::vector<Vec2> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(guess[i] > 0.0)) throw InputError("guess ray lengths must be positive");
        pts[i] = guess[i] * u[i];
    }
    const VelocityField vel = differentiate(pts, dt);

    CyclicBandSystem s;
    s.diag.assign(n, 1.0);
    s.sub.resize(n);
    s.sup.resize(n);
    s.rhs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double coef = guess[i] / (4.0 * exponent * dt * vel.speed[i]);
        s.sup[i] = coef * dot(vel.tangent[i], u[(i + 1) % n]);
        s.sub[i] = -coef * dot(vel.tangent[i], u[(i + n - 1) % n]);
        s.rhs[i] = norm(q[i]) / (exponent * std::pow(guess[i], exponent - 1.0) * std::sqrt(vel.speed[i])) +
                   (1.0 - 1.0 / (2.0 * exponent)) * guess[i];
    }
    return s;
}

namespace {

CyclicBandSystem assemble_m1(const RpsvCurve& q, std::span<const double> guess) {
    const std::size_t n = q.size();
    const double dt = q.dt();
    const std::vector<Vec2> u = direction_field(q);

    std::vector<Vec2> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(guess[i] > 0.0)) throw InputError("guess ray lengths must be positive");
        pts[i] = guess[i] * u[i];
    }
    const VelocityField vel = differentiate(pts, dt);

    CyclicBandSystem s;
    s.diag.assign(n, 1.0);
    s.sub.resize(n);
    s.sup.resize(n);
    s.rhs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double coef = guess[i] / (4.0 * dt * vel.speed[i]);
        s.sup[i] = coef * dot(vel.tangent[i], u[(i + 1) % n]);
        s.sub[i] = -coef * dot(vel.tangent[i], u[(i + n - 1) % n]);
        s.rhs[i] = norm(q[i]) / std::sqrt(vel.speed[i]) + 0.5 * guess[i];
    }
    return s;
}

CyclicBandSystem assemble_m0(const RpsvCurve& q, std::span<const double> guess) {
    const std::size_t n = q.size();
    const double dt = q.dt();
    const std::vector<Vec2> u = direction_field(q);

    std::vector<Vec2> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(guess[i] > 0.0)) throw InputError("guess ray lengths must be positive");
        pts[i] = guess[i] * u[i];
    }
    const VelocityField vel = differentiate(pts, dt);

    CyclicBandSystem s;
    s.diag.assign(n, 0.0);
    s.sub.resize(n);
    s.sup.resize(n);
    s.rhs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.sup[i] = dot(vel.tangent[i], u[(i + 1) % n]);
        s.sub[i] = -dot(vel.tangent[i], u[(i + n - 1) % n]);
        s.rhs[i] = 4.0 * dt * (norm(q[i]) * std::sqrt(vel.speed[i]) - 0.5 * vel.speed[i]);
    }
    return s;
}

}  // namespace

CyclicBandSystem assemble_newton_system(const RpsvCurve& q, std::span<const double> guess,
                                        double exponent) {
    if (exponent == 0.0) return assemble_m0(q, guess);
    if (exponent == 1.0) return assemble_m1(q, guess);
    return assemble_newton_system_general(q, guess, exponent);
}

std::vector<double> solve_cyclic_band(const CyclicBandSystem& s) {
    const std::size_t n = s.size();
    if (n < 3) throw InputError("cyclic band system needs at least 3 rows");
    if (s.sub.size() != n || s.sup.size() != n || s.rhs.size() != n) {
        throw InputError("cyclic band system dimensions disagree");
    }

    double rhs_scale = 0.0;
    for (double b : s.rhs) rhs_scale = std::max(rhs_scale, std::abs(b));
    const double matrix_scale = scale_of(s);
    const double pivot_floor = 1e-14 * std::max(matrix_scale, 1e-300);

    // Rank-one corner correction: A = T + u v^T with
    // u = (g, 0, ..., 0, sup[n-1]), v = (1, 0, ..., 0, sub[0]/g).
    const double corner_sub = s.sub[0];
    const double corner_sup = s.sup[n - 1];
    double g = -s.diag[0];
    if (std::abs(g) <= pivot_floor) g = -std::max(matrix_scale, 1e-300);

    std::vector<double> diag_mod(s.diag.begin(), s.diag.end());
    diag_mod[0] -= g;
    diag_mod[n - 1] -= corner_sup * corner_sub / g;
    std::vector<double> sub_open(s.sub.begin(), s.sub.end());
    std::vector<double> sup_open(s.sup.begin(), s.sup.end());
    sub_open[0] = 0.0;
    sup_open[n - 1] = 0.0;

    std::vector<double> corr_rhs(n, 0.0);
    corr_rhs[0] = g;
    corr_rhs[n - 1] = corner_sup;

    std::vector<double> x;
    std::vector<double> y, z;
    const bool ok = thomas_solve(diag_mod, sub_open, sup_open, s.rhs, y, pivot_floor) &&
                    thomas_solve(diag_mod, sub_open, sup_open, corr_rhs, z, pivot_floor);
    bool solved = false;
    if (ok) {
        const double v_last = corner_sub / g;
        const double denom = 1.0 + z[0] + v_last * z[n - 1];
        if (std::abs(denom) > 1e-14) {
            const double factor = (y[0] + v_last * y[n - 1]) / denom;
            x.resize(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - factor * z[i];
            solved = cyclic_residual(s, x) <= 1e-10 * std::max(rhs_scale, 1e-300);
        }
    }

    if (!solved) {
        if (n > kDenseFallbackLimit) throw NumericError("singular reconstruction system");
        if (!dense_solve(s, x)) throw NumericError("singular reconstruction system");
        double x_scale = 0.0;
        for (double v : x) x_scale = std::max(x_scale, std::abs(v));
        const double budget = 1e-8 * std::max(rhs_scale, matrix_scale * x_scale);
        if (!(cyclic_residual(s, x) <= std::max(budget, 1e-300))) {
            throw NumericError("singular reconstruction system");
        }
    }
    return x;
}

namespace {

bool winding_is_consistent(std::span<const Vec2> u) {
    int sign = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double c = cross(u[i], u[(i + 1) % u.size()]);
        if (c == 0.0) continue;
        const int s = c > 0.0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return sign != 0;
}

}  // namespace

ReconstructResult reconstruct_detailed(const RpsvCurve& q, const ReconstructOptions& opts,
                                       std::span<const double> speed_hint) {
    opts.validate();
    const double m_exp = q.exponent();
    const std::size_t n = q.size();
    const double dt = q.dt();
    const std::vector<Vec2> u = direction_field(q);

    std::vector<double> qmag(n);
    double qmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        qmag[i] = norm(q[i]);
        qmax = std::max(qmax, qmag[i]);
    }

    std::vector<double> rays(n);
    const bool use_hint = opts.initial_guess_mode == GuessMode::FromSystemSpeeds &&
                          speed_hint.size() == n && m_exp != 0.0;
    if (m_exp == 0.0) {
        // |q| fixes only the speed, so the guess must carry the shape: with
        // |dr/dt|^2 = rho'^2 + rho^2 |du/dt|^2 and a slowly varying rho,
        // rho ~ |q|^2 / |du/dt| (exact for circles).
        for (std::size_t i = 0; i < n; ++i) {
            const double du = norm(u[(i + 1) % n] - u[(i + n - 1) % n]) * 0.5 *
                              static_cast<double>(n);
            rays[i] = qmag[i] * qmag[i] / std::max(du, 1e-6);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double guess;
            if (use_hint) {
                guess = std::pow(qmag[i] / std::sqrt(speed_hint[i]), 1.0 / m_exp);
            } else {
                guess = std::pow(qmag[i], 2.0 / (2.0 * m_exp + 1.0));
            }
            rays[i] = std::max(guess, 1e-12 * qmax);
        }
    }

    // For m = 0 the ray scale is free; |q|^2 is the speed, so the length it
    // encodes pins the scale.
    double target_length = 0.0;
    if (m_exp == 0.0) {
        for (std::size_t i = 0; i < n; ++i) target_length += qmag[i] * qmag[i] * dt;
    }

    const bool star_warning = !winding_is_consistent(u);
    std::vector<double> residual_trace;
    bool damped = false;

    auto geometry = [&](const std::vector<double>& r) {
        std::vector<Vec2> pts(n);
        for (std::size_t i = 0; i < n; ++i) pts[i] = r[i] * u[i];
        return pts;
    };

    for (int iter = 0;; ++iter) {
        std::vector<Vec2> pts = geometry(rays);
        const VelocityField vel = differentiate(pts, dt);
        double fmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double model = m_exp == 1.0 ? rays[i] * std::sqrt(vel.speed[i])
                                              : std::pow(rays[i], m_exp) * std::sqrt(vel.speed[i]);
            fmax = std::max(fmax, std::abs(qmag[i] - model));
        }
        residual_trace.push_back(fmax);
        if (fmax <= opts.residual_tol * qmax) {
            return ReconstructResult{Contour(std::move(pts)), iter, std::move(residual_trace), damped,
                                     star_warning};
        }
        if (iter >= opts.max_newton_iters) {
            throw NumericError("reconstruction did not converge (residual " + std::to_string(fmax) +
                               " after " + std::to_string(iter) + " iterations)");
        }

        const CyclicBandSystem sys = assemble_newton_system(q, rays, m_exp);
        std::vector<double> next;
        if (m_exp == 0.0) {
            // The zero-diagonal system decouples into parity chains whose
            // consistency products sit near one, so a direct solve amplifies
            // the quasi-null modes; take a regularized step instead.
            if (n > kDenseFallbackLimit || !ridge_solve(sys, rays, 0.05, next)) {
                throw NumericError("singular reconstruction system");
            }
        } else {
            next = solve_cyclic_band(sys);
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!(next[i] > 0.0)) {
                next[i] = 0.1 * rays[i];
                damped = true;
            }
        }
        if (m_exp == 0.0) {
            const VelocityField next_vel = differentiate(geometry(next), dt);
            double len = 0.0;
            for (double sp : next_vel.speed) len += sp * dt;
            if (len > 0.0) {
                const double scale = target_length / len;
                for (double& r : next) r *= scale;
            }
        }

        // Backtrack toward the previous rays when the full step overshoots
        // (the linearization is poor far from the root). The search metric is
        // the smooth sum of squares; blended rays stay positive since both
        // endpoints are.
        const auto sum_sq_of = [&](const std::vector<double>& r) {
            const VelocityField v = differentiate(geometry(r), dt);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double model = m_exp == 1.0 ? r[i] * std::sqrt(v.speed[i])
                                                  : std::pow(r[i], m_exp) * std::sqrt(v.speed[i]);
                const double f = qmag[i] - model;
                acc += f * f;
            }
            return acc;
        };
        const double current_sum_sq = sum_sq_of(rays);
        double blend = 1.0;
        std::vector<double> trial = next;
        while (true) {
            try {
                if (sum_sq_of(trial) < current_sum_sq) break;
            } catch (const NumericError&) {
                // Degenerate trial geometry counts as an overshoot.
            }
            blend *= 0.5;
            if (blend < 1.0 / 1024.0) {
                // Averaged representations carry grid-scale noise that no
                // positive ray field can match pointwise (the speed stencil
                // is blind to the parity mode), so the iteration can floor
                // above the requested tolerance. Return the best iterate
                // when it is inside every downstream use; only a floor above
                // that is a failure.
                if (fmax <= 1e-3 * qmax) {
                    return ReconstructResult{Contour(geometry(rays)), iter,
                                             std::move(residual_trace), true, star_warning};
                }
                throw NumericError("reconstruction stalled (residual " + std::to_string(fmax) +
                                   ")");
            }
            damped = true;
            for (std::size_t i = 0; i < n; ++i) trial[i] = rays[i] + blend * (next[i] - rays[i]);
        }
        rays = std::move(trial);
    }
}

Contour reconstruct(const RpsvCurve& q, const ReconstructOptions& opts,
                    std::span<const double> speed_hint) {
    return reconstruct_detailed(q, opts, speed_hint).contour;
}

}  // namespace rpsv
