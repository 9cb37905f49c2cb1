#pragma once

/**
 * @file mean.hpp
 * @brief Mean of a contour system in RPSV space: pointwise mean, double
 *        energy over reparameterization and centroid displacement, the
 *        proper-centroid displacement formula, and the alternating
 *        (inner reparameterization / outer displacement) solver.
 */

#include <iosfwd>
#include <vector>

#include "rpsv/contour.hpp"
#include "rpsv/reconstruct.hpp"
#include "rpsv/reparam.hpp"

namespace rpsv {

struct MeanOptions {
    int outer_max_iters = 50;
    /// Stop when the relative change of the outer energy falls below this.
    double outer_energy_tol = 1e-6;
    ReparamOptions reparam;
    ReconstructOptions reconstruct;
    double exponent = 1.0;
    /// Optional sink for one line per outer iteration.
    std::ostream* log = nullptr;

    void validate() const;
};

struct MeanResult {
    Contour mean_contour;               ///< in input-frame coordinates
    RpsvCurve mean_rpsv;                ///< mean of the final system, about the final origin
    std::vector<Diffeomorphism> diffeos;
    Vec2 centroid_displacement;         ///< summed displacements from the homogeneous centroid
    std::vector<double> energy_trace;   ///< accepted outer-iteration energies, non-increasing
    bool converged = false;
    ContourSystem optimized;            ///< final reparameterized system about the final origin
};

/// Pointwise mean of the members' RPSV values, q_i = (1/n) sum_k q_{k,i}.
RpsvCurve rpsv_mean(const ContourSystem& sys, double exponent = 1.0);

/// Energy of the system against the reconstructed mean when the basis origin
/// is displaced by d: every position (mean and members) shifts by -d while
/// the speeds stay those of the undisplaced geometries. At d = 0 this is the
/// summed squared RPSV distance to the mean.
double double_energy(const ContourSystem& sys, const Contour& mean, const VelocityField& mean_vel,
                     Vec2 displacement, double exponent = 1.0);

struct CentroidDisplacement {
    Vec2 displacement;
    /// Set when the arithmetic-geometric denominator vanishes, which happens
    /// only when all members are identical; the displacement is then zero.
    bool identical_system = false;
};

/// Optimal origin displacement for the current parameterization:
/// d = [sum_i int (r_i sqrt(s_i) - r sqrt(s)) sqrt(s_i) dt]
///   / [2 sum_i int ((s_i + s)/2 - sqrt(s_i s)) dt],
/// with s the speeds; the denominator is nonnegative term by term.
CentroidDisplacement proper_centroid_displacement(const ContourSystem& sys, const Contour& mean,
                                                  const VelocityField& mean_vel);

/// Unsimplified displacement formula, written against arc-length position
/// integrals S_i = int r_i ds_i and lengths L_i; agrees with
/// proper_centroid_displacement once the mean identity
/// r sqrt(s) = (1/n) sum r_i sqrt(s_i) holds. Kept as a cross-check.
Vec2 proper_centroid_displacement_reference(const ContourSystem& sys, const Contour& mean,
                                            const VelocityField& mean_vel);

/// Full alternating solver: center the system at its homogeneous centroid,
/// then repeat (reparameterize, average, reconstruct, displace) until the
/// outer energy settles. The sign of each displacement step is settled by
/// evaluating the energy at both candidates; the returned state is the best
/// recorded one. Throws NumericError("outer stagnation") when the iteration
/// limit is reached while the energy still moves above the recorded minimum.
MeanResult solve_double_optimization(const ContourSystem& sys, const MeanOptions& opts,
                                     unsigned threads = 0);

}  // namespace rpsv
