/**
 * @file rpsv_cli.cpp
 * @brief Command-line front end: load contour sets, run the mean / distance /
 *        interpolation pipelines, emit text results and SVG overlays.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rpsv/contour.hpp"
#include "rpsv/contour_io.hpp"
#include "rpsv/interp.hpp"
#include "rpsv/mean.hpp"
#include "rpsv/metric.hpp"
#include "rpsv/reconstruct.hpp"
#include "rpsv/svg.hpp"

namespace {

using namespace rpsv;

struct RunConfig {
    std::size_t points = 256;
    double exponent = 1.0;

    double step_size = 1.0;
    int max_iters = 5000;
    double residual_tol = 1e-6;
    int lut_oversample = 16;
    double step_clamp = 0.2;

    int outer_max_iters = 50;
    double outer_energy_tol = 1e-6;

    int newton_max_iters = 50;
    double newton_tol = 1e-12;

    std::string output = "-";
    std::string svg;
    std::string trace;
    unsigned threads = 1;
    unsigned seed = 0;  ///< reserved for fixture generation; nothing here draws randomness
    double flag_outliers = 0.0;
    int frames_per_gap = 1;
    bool verbose = false;

    ReparamOptions reparam() const {
        return ReparamOptions{step_size, max_iters, residual_tol, lut_oversample, step_clamp};
    }
    ReconstructOptions reconstruct() const {
        return ReconstructOptions{newton_max_iters, newton_tol, GuessMode::FromSystemSpeeds};
    }
    MeanOptions mean() const {
        MeanOptions m;
        m.outer_max_iters = outer_max_iters;
        m.outer_energy_tol = outer_energy_tol;
        m.reparam = reparam();
        m.reconstruct = reconstruct();
        m.exponent = exponent;
        m.log = verbose ? &std::cerr : nullptr;
        return m;
    }
};

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Where human-readable results go: stdout, unless the contour output already
/// claims it.
std::ostream& summary_stream(const RunConfig& cfg) {
    return cfg.output == "-" ? std::cerr : std::cout;
}

ContourSystem load_system(const std::string& path, const RunConfig& cfg, std::size_t min_count,
                          std::vector<std::string>* labels = nullptr) {
    const ContourFile file = read_contour_file(path);
    if (file.entries.size() < min_count) {
        throw InputError("need at least " + std::to_string(min_count) + " contours");
    }
    std::vector<Contour> contours;
    contours.reserve(file.entries.size());
    for (const NamedPolygon& entry : file.entries) {
        contours.push_back(resample_uniform_arclength(entry.points, cfg.points));
        if (labels) labels->push_back(entry.label);
    }
    return ContourSystem(std::move(contours));
}

void emit_overlay_svg(const std::string& path, const ContourSystem& inputs, const Contour* mean) {
    std::vector<SvgPolygon> shapes;
    for (const Contour& c : inputs.contours()) {
        shapes.push_back({c.points(), "#888888", 1.5});
    }
    if (mean) shapes.push_back({mean->points(), "green", 2.5});
    write_svg(path, shapes);
}

int cmd_mean(const std::string& input, const RunConfig& cfg) {
    std::vector<std::string> labels;
    const ContourSystem sys = load_system(input, cfg, 2, &labels);
    const MeanResult result = solve_double_optimization(sys, cfg.mean(), cfg.threads);

    ContourFile out;
    out.entries.push_back({"mean", result.mean_contour.points()});
    write_contour_file(cfg.output, out);

    if (!cfg.trace.empty()) {
        std::ofstream tr(cfg.trace);
        if (!tr) throw InputError("cannot open '" + cfg.trace + "' for writing");
        for (double e : result.energy_trace) tr << fmt(e) << '\n';
    }

    std::ostream& sum = summary_stream(cfg);
    sum << "outer-iterations " << result.energy_trace.size() << " converged "
        << (result.converged ? 1 : 0) << '\n';
    if (cfg.trace.empty()) {
        for (double e : result.energy_trace) sum << "energy " << fmt(e) << '\n';
    }
    sum << "centroid-displacement " << fmt(result.centroid_displacement.x) << ' '
        << fmt(result.centroid_displacement.y) << '\n';
    for (std::size_t i = 0; i < result.optimized.count(); ++i) {
        const double d =
            distance_sq(result.mean_rpsv, to_rpsv(result.optimized[i], cfg.exponent));
        sum << "dissimilarity " << labels[i] << ' ' << fmt(d) << '\n';
    }

    if (!cfg.svg.empty()) emit_overlay_svg(cfg.svg, sys, &result.mean_contour);
    return 0;
}

int cmd_distance(const std::string& input, const RunConfig& cfg) {
    std::vector<std::string> labels;
    const ContourSystem sys = load_system(input, cfg, 2, &labels);
    const std::size_t n = sys.count();

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) pairs.emplace_back(i, j);
        }
    }
    std::vector<double> directed(n * n, 0.0);
    auto run_one = [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        directed[i * n + j] = dissimilarity(sys[i], sys[j], cfg.exponent, cfg.reparam());
    };
    if (cfg.threads <= 1) {
        for (std::size_t p = 0; p < pairs.size(); ++p) run_one(p);
    } else {
        std::atomic<std::size_t> cursor{0};
        auto drain = [&] {
            for (std::size_t p = cursor.fetch_add(1); p < pairs.size(); p = cursor.fetch_add(1)) {
                run_one(p);
            }
        };
        std::vector<std::thread> pool;
        const unsigned count = std::min<unsigned>(cfg.threads, static_cast<unsigned>(pairs.size()));
        for (unsigned t = 0; t + 1 < count; ++t) pool.emplace_back(drain);
        drain();
        for (std::thread& t : pool) t.join();
    }

    double max_asym = 0.0;
    std::vector<double> matrix(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double a = directed[i * n + j];
            const double b = directed[j * n + i];
            matrix[i * n + j] = matrix[j * n + i] = 0.5 * (a + b);
            max_asym = std::max(max_asym, std::abs(a - b));
        }
    }

    auto write_matrix = [&](std::ostream& out) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j) out << ' ';
                out << fmt(matrix[i * n + j]);
            }
            out << '\n';
        }
    };
    if (cfg.output == "-") {
        write_matrix(std::cout);
    } else {
        std::ofstream out(cfg.output);
        if (!out) throw InputError("cannot open '" + cfg.output + "' for writing");
        write_matrix(out);
    }

    std::ostream& sum = summary_stream(cfg);
    sum << "max-asymmetry " << fmt(max_asym) << '\n';
    if (cfg.flag_outliers > 0.0) {
        const std::vector<std::size_t> flagged =
            flag_outliers(sys, cfg.flag_outliers, cfg.mean(), cfg.threads);
        sum << "outliers";
        for (std::size_t i : flagged) sum << ' ' << i;
        sum << '\n';
    }
    return 0;
}

int cmd_interpolate(const std::string& input, const RunConfig& cfg) {
    std::vector<std::string> labels;
    const ContourSystem slices = load_system(input, cfg, 2, &labels);
    if (cfg.frames_per_gap < 0) throw InputError("frames-per-gap must be nonnegative");

    ContourFile out;
    out.entries.push_back({labels[0], slices[0].points()});
    for (std::size_t g = 0; g + 1 < slices.count(); ++g) {
        if (cfg.frames_per_gap > 0) {
            InterpRequest req{slices[g], slices[g + 1], {}, cfg.exponent, cfg.reparam(),
                              cfg.reconstruct()};
            for (int k = 1; k <= cfg.frames_per_gap; ++k) {
                req.taus.push_back(static_cast<double>(k) /
                                   static_cast<double>(cfg.frames_per_gap + 1));
            }
            const std::vector<Contour> frames = interpolate(req, cfg.threads);
            for (std::size_t f = 0; f < frames.size(); ++f) {
                char label[64];
                std::snprintf(label, sizeof(label), "gap%zu_tau%g", g, req.taus[f]);
                out.entries.push_back({label, frames[f].points()});
            }
        }
        out.entries.push_back({labels[g + 1], slices[g + 1].points()});
    }
    write_contour_file(cfg.output, out);

    if (!cfg.svg.empty()) {
        for (std::size_t f = 0; f < out.entries.size(); ++f) {
            char path[512];
            std::snprintf(path, sizeof(path), "%s%04zu.svg", cfg.svg.c_str(), f);
            const SvgPolygon shape{out.entries[f].points, "green", 2.0};
            write_svg(path, std::span<const SvgPolygon>(&shape, 1));
        }
    }
    return 0;
}

int cmd_roundtrip_check(const std::string& input, const RunConfig& cfg) {
    const ContourFile file = read_contour_file(input);
    std::ostream& sum = summary_stream(cfg);
    bool ok = true;
    for (const NamedPolygon& entry : file.entries) {
        Contour c = resample_uniform_arclength(entry.points, cfg.points);
        const Vec2 center = arc_length_centroid(c.points());
        c = c.translated(-center);

        double diameter = 0.0;
        for (const Vec2& p : c.points()) diameter = std::max(diameter, 2.0 * norm(p));

        const ReconstructResult rec =
            reconstruct_detailed(to_rpsv(c, cfg.exponent), cfg.reconstruct());
        double err = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            err = std::max(err, norm(rec.contour[i] - c[i]));
        }
        const double rel = err / diameter;
        sum << "roundtrip " << entry.label << " error " << fmt(rel) << " iterations "
            << rec.iterations << (rec.star_shape_warning ? " star-shape-warning" : "") << '\n';
        ok = ok && rel <= 1e-6;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"elastic mean, dissimilarity and interpolation of closed planar contours"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "read options from a 'key = value' file");

    RunConfig cfg;
    app.add_option("--points", cfg.points, "resample count per contour")->capture_default_str();
    app.add_option("--exponent", cfg.exponent, "representation exponent m")->capture_default_str();
    app.add_option("--step-size", cfg.step_size, "descent step multiplier")->capture_default_str();
    app.add_option("--max-iters", cfg.max_iters, "max descent iterations per pair")
        ->capture_default_str();
    app.add_option("--residual-tol", cfg.residual_tol, "pairwise convergence tolerance")
        ->capture_default_str();
    app.add_option("--lut-oversample", cfg.lut_oversample, "lookup table oversampling factor")
        ->capture_default_str();
    app.add_option("--step-clamp", cfg.step_clamp, "max parameter move as a fraction of dt")
        ->capture_default_str();
    app.add_option("--outer-max-iters", cfg.outer_max_iters, "max outer iterations")
        ->capture_default_str();
    app.add_option("--outer-energy-tol", cfg.outer_energy_tol, "outer relative energy tolerance")
        ->capture_default_str();
    app.add_option("--newton-max-iters", cfg.newton_max_iters, "max reconstruction iterations")
        ->capture_default_str();
    app.add_option("--newton-tol", cfg.newton_tol, "reconstruction residual tolerance")
        ->capture_default_str();
    app.add_option("-o,--output", cfg.output, "output path ('-' for stdout)")
        ->capture_default_str();
    app.add_option("--svg", cfg.svg, "SVG overlay path (interpolate: filename prefix)");
    app.add_option("--trace", cfg.trace, "write the energy trace to this file");
    app.add_option("--threads", cfg.threads, "bound on concurrent optimizations")
        ->capture_default_str();
    app.add_option("--seed", cfg.seed, "random seed (reserved for fixtures)")
        ->capture_default_str();
    app.add_option("--flag-outliers", cfg.flag_outliers,
                   "flag members farther than FACTOR x median from the mean");
    app.add_option("--frames-per-gap", cfg.frames_per_gap, "interior frames per slice gap")
        ->capture_default_str();
    app.add_flag("--verbose", cfg.verbose, "log outer iterations to stderr");

    std::string input_mean, input_distance, input_interpolate, input_roundtrip;
    CLI::App* mean = app.add_subcommand("mean", "average a contour set");
    mean->add_option("input", input_mean, "contour set file")->required();
    CLI::App* distance = app.add_subcommand("distance", "pairwise dissimilarity matrix");
    distance->add_option("input", input_distance, "contour set file")->required();
    CLI::App* interpolate_cmd = app.add_subcommand("interpolate", "densify a stack of slices");
    interpolate_cmd->add_option("input", input_interpolate, "contour set file")->required();
    CLI::App* roundtrip = app.add_subcommand("roundtrip-check", "");
    roundtrip->add_option("input", input_roundtrip, "contour set file")->required();
    roundtrip->group("");  // hidden
    CLI::App* dump = app.add_subcommand("dump-config", "print the effective configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dump->parsed()) {
            std::cout << app.config_to_str(true, false);
            return 0;
        }
        if (mean->parsed()) return cmd_mean(input_mean, cfg);
        if (distance->parsed()) return cmd_distance(input_distance, cfg);
        if (interpolate_cmd->parsed()) return cmd_interpolate(input_interpolate, cfg);
        if (roundtrip->parsed()) return cmd_roundtrip_check(input_roundtrip, cfg);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
