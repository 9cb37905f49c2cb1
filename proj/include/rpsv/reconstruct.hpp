#pragma once

/**
 * @file reconstruct.hpp
 * @brief Recovery of a contour from its RPSV curve by Newton-Raphson on the
 *        per-point ray lengths |r_i|, solving a cyclic near-tridiagonal
 *        linear system in every iteration.
 *
 * The direction field u = q/|q| = r/|r| is fixed by the representation, so
 * only the ray lengths are unknown. Each Newton step linearizes
 * f_i = |q_i| - |r_i|^m sqrt(|dr/dt|_i) around the current guess, with the
 * derivative coupling neighbouring rays through the central-difference
 * velocity.
 */

#include <span>
#include <vector>

#include "rpsv/contour.hpp"

namespace rpsv {

/// Cyclic band matrix A x = b with one sub- and one superdiagonal plus the
/// two wrap corners: row i reads sub[i] * x_{i-1} + diag[i] * x_i +
/// sup[i] * x_{i+1} = rhs[i] with indices modulo M, so sub[0] is the
/// upper-right corner entry and sup[M-1] the lower-left one.
struct CyclicBandSystem {
    std::vector<double> diag;
    std::vector<double> sub;
    std::vector<double> sup;
    std::vector<double> rhs;

    std::size_t size() const { return diag.size(); }
};

/// Initial ray-length strategy.
enum class GuessMode {
    /// |r|_i = (|q_i| / sqrt(mean constituent speed_i))^(1/m); needs a speed
    /// hint (falls back to FromQPower without one).
    FromSystemSpeeds,
    /// |r|_i = |q_i|^(2/(2m+1)), the dimensional balance when |dr/dt| ~ |r|.
    FromQPower,
};

struct ReconstructOptions {
    int max_newton_iters = 50;
    /// Stop when max_i |f_i| <= residual_tol * max_i |q_i|.
    double residual_tol = 1e-12;
    GuessMode initial_guess_mode = GuessMode::FromSystemSpeeds;

    void validate() const;
};

/// Outcome of a reconstruction with its iteration diagnostics.
struct ReconstructResult {
    Contour contour;
    int iterations = 0;
    std::vector<double> residual_trace;  ///< max|f| before each solve, then at exit
    /// Some Newton step needed the positivity clamp or a backtracked blend,
    /// or the iteration returned from the noise-floor stall (see
    /// reconstruct_detailed).
    bool damped = false;
    bool star_shape_warning = false;     ///< direction field winds inconsistently
};

/// Unit directions u_i = q_i / |q_i|; constant throughout the iteration.
/// Throws NumericError("ray through origin") if some q_i vanishes.
std::vector<Vec2> direction_field(const RpsvCurve& q);

/// Newton system for the generalized exponent: unit diagonal, off-diagonal
/// couplings +/- (1/(4 m dt)) (|r|/|dr/dt|) e . u_{i +/- 1} and right side
/// |q|/(m |r|^(m-1) sqrt|dr/dt|) + (1 - 1/(2m)) |r|, all evaluated on the
/// guess geometry |r| u. The m = 0 form (zero diagonal, couplings e . u_{+/-},
/// right side 4 dt (|q| sqrt|dr/dt| - |dr/dt|/2)) is produced for exponent 0.
/// Throws InputError for m = -1/2.
CyclicBandSystem assemble_newton_system(const RpsvCurve& q, std::span<const double> guess,
                                        double exponent);

/// Always evaluates the generalized coefficient formulas, even at m = 1
/// (assemble_newton_system dispatches to a specialized m = 1 path that this
/// must match bit for bit).
CyclicBandSystem assemble_newton_system_general(const RpsvCurve& q, std::span<const double> guess,
                                                double exponent);

/// Exact solve via rank-one corner correction of a standard tridiagonal
/// elimination (two tridiagonal solves plus a combination). Falls back to a
/// dense partially pivoted solve for M <= 2048 when the band elimination hits
/// a degenerate pivot or fails the residual check; throws
/// NumericError("singular reconstruction system") if both fail.
std::vector<double> solve_cyclic_band(const CyclicBandSystem& sys);

/// Full Newton loop with a backtracking line search on the squared residual.
/// Negative solved ray lengths are clamped to 0.1 x the previous value. For
/// exponent 0 the ray scale left free by the representation is fixed by
/// matching the total length encoded in |q|^2. Averaged inputs can carry
/// grid-scale noise no ray field matches pointwise; if the search stalls
/// with max|f| <= 1e-4 max|q| the best iterate is returned with `damped`
/// set. Throws NumericError on non-convergence (message carries the
/// residual).
ReconstructResult reconstruct_detailed(const RpsvCurve& q, const ReconstructOptions& opts,
                                       std::span<const double> speed_hint = {});

/// Convenience wrapper returning only the contour.
Contour reconstruct(const RpsvCurve& q, const ReconstructOptions& opts = {},
                    std::span<const double> speed_hint = {});

}  // namespace rpsv
