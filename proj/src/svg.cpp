#include "rpsv/svg.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <ostream>

#include "rpsv/errors.hpp"

namespace rpsv {

namespace {
constexpr double kCanvas = 800.0;
constexpr double kMargin = 0.05;
}  // namespace

void write_svg(std::ostream& out, std::span<const SvgPolygon> shapes) {
    double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
    double hi_x = -lo_x, hi_y = -lo_y;
    for (const SvgPolygon& s : shapes) {
        for (const Vec2& p : s.points) {
            lo_x = std::min(lo_x, p.x);
            lo_y = std::min(lo_y, p.y);
            hi_x = std::max(hi_x, p.x);
            hi_y = std::max(hi_y, p.y);
        }
    }
    const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
    const double scale = kCanvas * (1.0 - 2.0 * kMargin) / span;
    const double pad = kCanvas * kMargin;
    // Center the drawing and flip y so the mathematical orientation is kept.
    const double off_x = pad + 0.5 * (kCanvas * (1.0 - 2.0 * kMargin) - scale * (hi_x - lo_x));
    const double off_y = pad + 0.5 * (kCanvas * (1.0 - 2.0 * kMargin) - scale * (hi_y - lo_y));
    auto map = [&](Vec2 p) -> Vec2 {
        return {off_x + scale * (p.x - lo_x), kCanvas - (off_y + scale * (p.y - lo_y))};
    };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas << "\" height=\""
        << kCanvas << "\" viewBox=\"0 0 " << kCanvas << ' ' << kCanvas << "\">\n";
    for (const SvgPolygon& s : shapes) {
        out << "  <polygon fill=\"none\" stroke=\"" << s.stroke << "\" stroke-width=\""
            << s.stroke_width << "\" points=\"";
        bool first = true;
        for (const Vec2& p : s.points) {
            const Vec2 q = map(p);
            if (!first) out << ' ';
            first = false;
            out << q.x << ',' << q.y;
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
}

void write_svg(const std::string& path, std::span<const SvgPolygon> shapes) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    write_svg(out, shapes);
}

}  // namespace rpsv
