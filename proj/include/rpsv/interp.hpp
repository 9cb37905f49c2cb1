#pragma once

/**
 * @file interp.hpp
 * @brief Linear-path interpolation between contours in RPSV space,
 *        dissimilarity scoring, and outlier flagging.
 */

#include <cstddef>
#include <vector>

#include "rpsv/contour.hpp"
#include "rpsv/mean.hpp"

namespace rpsv {

struct InterpRequest {
    Contour a;
    Contour b;
    std::vector<double> taus;  ///< sorted, each within [0, 1]
    double exponent = 1.0;
    ReparamOptions reparam;
    ReconstructOptions reconstruct;

    void validate() const;
};

/// Point on the linear path, q(tau) = (1 - tau) q1 + tau q2. The second curve
/// is expected to be already optimally reparameterized against the first.
RpsvCurve linear_path_point(const RpsvCurve& q1, const RpsvCurve& q2, double tau);

/// Reparameterizes b against a once, then reconstructs one contour per tau
/// from the linear path between their representations. The pair is centered
/// at its homogeneous centroid for the representation step; outputs are in
/// input coordinates. Reconstruction failures carry their tau.
std::vector<Contour> interpolate(const InterpRequest& req, unsigned threads = 0);

/// Pairwise matching energy after optimal reparameterization of b against a,
/// about the pair's homogeneous centroid. Symmetric up to optimization
/// tolerance.
double dissimilarity(const Contour& a, const Contour& b, double exponent,
                     const ReparamOptions& opts);

/// Indices whose RPSV distance to the system mean exceeds threshold_factor
/// times the median distance. Needs at least 3 members.
std::vector<std::size_t> flag_outliers(const ContourSystem& sys, double threshold_factor,
                                       const MeanOptions& opts, unsigned threads = 0);

}  // namespace rpsv
