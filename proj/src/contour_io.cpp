#include "rpsv/contour_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rpsv/errors.hpp"

namespace rpsv {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw InputError("line " + std::to_string(line) + ": " + what);
}

bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t i = line.find_first_not_of(" \t\r");
        if (i == std::string::npos) continue;
        if (line[i] == '#') continue;
        return true;
    }
    return false;
}

}  // namespace

ContourFile read_contour_file(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    if (!next_content_line(in, line, line_no)) fail(line_no, "empty contour file");
    {
        std::istringstream head(line);
        std::string tag, version;
        head >> tag >> version;
        if (tag != "contourset" || version != "v1") {
            fail(line_no, "expected header 'contourset v1'");
        }
    }

    ContourFile file;
    while (next_content_line(in, line, line_no)) {
        std::istringstream header(line);
        std::string keyword, label;
        long count = 0;
        header >> keyword >> label >> count;
        if (keyword != "contour" || header.fail()) fail(line_no, "expected 'contour <label> <count>'");
        if (count < 3) fail(line_no, "contour needs at least 3 points");

        NamedPolygon entry;
        entry.label = label;
        entry.points.reserve(static_cast<std::size_t>(count));
        for (long p = 0; p < count; ++p) {
            if (!next_content_line(in, line, line_no)) fail(line_no, "unexpected end of file");
            std::istringstream coords(line);
            double x = 0.0, y = 0.0;
            coords >> x >> y;
            if (coords.fail()) fail(line_no, "expected 'x y'");
            if (!std::isfinite(x) || !std::isfinite(y)) fail(line_no, "non-finite coordinate");
            entry.points.push_back({x, y});
        }
        file.entries.push_back(std::move(entry));
    }
    if (file.entries.empty()) throw InputError("contour file holds no contours");
    return file;
}

ContourFile read_contour_file(const std::string& path) {
    if (path == "-") return read_contour_file(std::cin);
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_contour_file(in);
}

void write_contour_file(std::ostream& out, const ContourFile& file) {
    out << "contourset v1\n";
    char buf[64];
    for (const NamedPolygon& entry : file.entries) {
        out << "contour " << (entry.label.empty() ? "unnamed" : entry.label) << ' '
            << entry.points.size() << '\n';
        for (const Vec2& p : entry.points) {
            std::snprintf(buf, sizeof(buf), "%.17g %.17g", p.x, p.y);
            out << buf << '\n';
        }
    }
}

void write_contour_file(const std::string& path, const ContourFile& file) {
    if (path == "-") {
        write_contour_file(std::cout, file);
        return;
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    write_contour_file(out, file);
}

}  // namespace rpsv
