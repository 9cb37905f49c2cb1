#pragma once

/**
 * @file reparam.hpp
 * @brief Pairwise optimal reparameterization of closed contours by gradient
 *        descent on the elastic matching energy, plus the supporting
 *        diffeomorphism and lookup-table machinery.
 *
 * The pairwise objective is the squared RPSV distance between a fixed
 * reference contour and a moving contour whose points are redistributed along
 * their static locus. Each iteration evaluates the stationarity residual
 *
 *   res_i = dr1_i . rk_i - r1_i . drk_i + (r1_i . rk_i) (Gamma1_i - Gammak_i) / 2,
 *
 * steps the per-point parameters against it, and moves the points through a
 * dense lookup table of the original polygon. The accumulated composition of
 * the per-iteration near-identity maps is returned alongside the result.
 */

#include <cstddef>
#include <span>
#include <vector>

#include "rpsv/contour.hpp"

namespace rpsv {

/// Monotone circular map of the parameter interval, stored as per-point
/// target parameters gamma(t_i) in [0, T). Wrapped increments are strictly
/// positive and add up to exactly one period.
class Diffeomorphism {
public:
    /// Throws InputError if the wrapped increments are not all positive or do
    /// not sum to the period within 1e-9.
    explicit Diffeomorphism(std::vector<double> targets);

    static Diffeomorphism identity(std::size_t point_count);

    /// Circular rotation of the start point by `shift` grid steps.
    static Diffeomorphism grid_shift(std::size_t point_count, std::size_t shift);

    std::size_t size() const { return targets_.size(); }
    double period() const { return Contour::kPeriod; }
    const std::vector<double>& targets() const { return targets_; }
    double operator[](std::size_t i) const { return targets_[i]; }

    /// Piecewise-linear circular evaluation at an arbitrary parameter.
    double evaluate(double t) const;

    /// Largest wrapped deviation max_i |gamma(t_i) - t_i| (deviations taken
    /// in (-T/2, T/2]).
    double max_deviation_from_identity() const;

private:
    Diffeomorphism() = default;
    std::vector<double> targets_;
};

/// (outer o inner)(t_i) = outer evaluated at inner's targets.
Diffeomorphism compose(const Diffeomorphism& outer, const Diffeomorphism& inner);

/// Dense arc-position table over a fixed contour: oversample * M positions
/// uniform in the contour's parameter, evaluated anywhere by circular linear
/// interpolation. Entries come from the periodic cubic spline through the
/// points, so the tabulated locus is smooth between the original knots;
/// evaluation at the original parameter knots reproduces the contour points
/// exactly.
class ContourLUT {
public:
    static constexpr int kMinOversample = 8;

    ContourLUT(const Contour& c, int oversample);

    int oversample() const { return oversample_; }
    std::size_t table_size() const { return table_.size(); }

    Vec2 evaluate(double t) const;

private:
    std::vector<Vec2> table_;
    int oversample_;
};

/// Knobs for the pairwise descent.
struct ReparamOptions {
    /// Dimensionless multiplier on the stability-scaled pseudo-time step
    /// dt^2 / (max|r1| max|rk|).
    double step_size = 1.0;
    int max_iters = 5000;
    /// Convergence: accepted per-iteration parameter moves all below
    /// residual_tol * dt. Equivalently max|res| <= residual_tol * R1 Rk / dt
    /// at the base step, with R the max position magnitudes.
    double residual_tol = 1e-6;
    int lut_oversample = 16;
    /// Max per-iteration move as a fraction of dt; must stay below 0.5 so the
    /// clamped increments dt*(1 -/+ 2*step_clamp) remain positive.
    double step_clamp = 0.2;

    void validate() const;
};

/// Stationarity residual of the pairwise matching energy between a fixed
/// reference contour and contour k, both differentiated against the same
/// basis origin. Zero field means the current point distribution of k is
/// stationary.
std::vector<double> el_residual(const Contour& ref, const VelocityField& ref_vel,
                                const Contour& k, const VelocityField& k_vel);

/// Residual for the generalized representation |r|^m u sqrt(|dr/dt|): the
/// first two terms project through m*uu + uperp*uperp instead of the
/// identity. Reduces exactly to el_residual at m = 1. Throws InputError for
/// m = -1/2 and NumericError if the origin lies on either contour.
std::vector<double> el_residual_generalized(const Contour& ref, const VelocityField& ref_vel,
                                            const Contour& k, const VelocityField& k_vel,
                                            double exponent);

/// One descent step: raw targets t_i - step * residual_i, increments clamped
/// into dt * (1 - 2c, 1 + 2c) and renormalized to a full period. A zero
/// residual returns the exact identity. `step` carries the full pseudo-time
/// scaling (see ReparamOptions::step_size).
Diffeomorphism gradient_step(std::span<const double> residual, double step, std::size_t point_count,
                             double step_clamp);

/// Convenience overload using opts.step_size as the raw step.
Diffeomorphism gradient_step(const Contour& k, std::span<const double> residual,
                             const ReparamOptions& opts);

/// Moves every point of k to lut.evaluate(map.targets[i]); the locus is
/// unchanged up to lookup interpolation.
Contour redistribute(const Contour& k, const ContourLUT& lut, const Diffeomorphism& map);

/// Outcome of a pairwise optimization.
struct PairwiseResult {
    Contour contour;                  ///< k with its points redistributed
    Diffeomorphism map;               ///< cumulative gamma_k (original parameters)
    std::vector<double> energy_trace; ///< accepted squared-distance values, starting at the initial energy
    bool converged = false;
    int iterations = 0;
};

/// Runs the full pairwise loop: brute-force cyclic start-point alignment
/// (rescanned periodically), then residual -> step -> redistribute ->
/// accumulate with a halving line search; the recorded energies never
/// increase. Grid-scale content that the stencils cannot see is stripped
/// from the accumulated map between descent phases. When the line search
/// exhausts double resolution the state is the terminus of the discrete
/// descent and is returned as converged; NumericError("no descent
/// possible") fires only for non-finite energies.
PairwiseResult optimize_pairwise(const Contour& ref, const Contour& k, const ReparamOptions& opts,
                                 double exponent = 1.0);

/// Result of reparameterizing a whole system against one reference member.
struct SystemReparamResult {
    ContourSystem system;
    std::vector<Diffeomorphism> maps;  ///< identity at ref_index
};

/// Pairwise-optimizes every contour against the one at ref_index, which is
/// left untouched. Pairwise failures are rethrown with the contour index
/// attached. `threads` bounds concurrent pairwise optimizations (0 = serial).
SystemReparamResult optimize_system(const ContourSystem& sys, std::size_t ref_index,
                                    const ReparamOptions& opts, double exponent = 1.0,
                                    unsigned threads = 0);

}  // namespace rpsv
