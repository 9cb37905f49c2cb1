#pragma once

/**
 * @file contour_io.hpp
 * @brief Line-oriented plain-text contour sets.
 *
 * Format:
 *
 *   contourset v1
 *   contour <label> <count>
 *   <x> <y>          (count lines)
 *   contour ...
 *
 * Coordinates are written with 17 significant digits, so a write/read round
 * trip is lossless for doubles.
 */

#include <iosfwd>
#include <string>
#include <vector>

#include "rpsv/geometry.hpp"

namespace rpsv {

struct NamedPolygon {
    std::string label;
    std::vector<Vec2> points;
};

struct ContourFile {
    std::vector<NamedPolygon> entries;
};

/// Parses a contour set. Throws InputError with a line number on malformed
/// input: missing version tag, bad counts, non-finite coordinates, or fewer
/// than 3 points per contour.
ContourFile read_contour_file(std::istream& in);

/// Convenience wrapper; "-" reads standard input.
ContourFile read_contour_file(const std::string& path);

void write_contour_file(std::ostream& out, const ContourFile& file);

/// Convenience wrapper; "-" writes standard output.
void write_contour_file(const std::string& path, const ContourFile& file);

}  // namespace rpsv
