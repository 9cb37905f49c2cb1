#pragma once

/**
 * @file svg.hpp
 * @brief Minimal SVG emission for contour overlays: fixed 800x800 canvas,
 *        inputs auto-fitted with a 5% margin.
 */

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rpsv/geometry.hpp"

namespace rpsv {

struct SvgPolygon {
    std::vector<Vec2> points;   ///< closed: the last point joins the first
    std::string stroke = "#888888";
    double stroke_width = 1.5;
};

void write_svg(std::ostream& out, std::span<const SvgPolygon> shapes);

/// Writes to a file; throws InputError when the file cannot be opened.
void write_svg(const std::string& path, std::span<const SvgPolygon> shapes);

}  // namespace rpsv
