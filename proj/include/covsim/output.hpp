#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "covsim/metrics.hpp"
#include "covsim/sim.hpp"

namespace covsim {

class IoFailureError : public Error { public: using Error::Error; };

/// Formats a double with 9 significant digits, locale-independent.
inline std::string format_float(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

inline CostSeries cost_series_from_trace(const SimTrace& trace,
                                         CostSeries::Normalization mode = CostSeries::Normalization::Raw) {
    CostSeries series;
    series.normalization = mode;
    series.values.reserve(trace.records.size());
    const double initial = trace.records.empty() ? 1.0 : trace.records.front().cost;
    for (const TraceRecord& r : trace.records) {
        series.values.push_back(mode == CostSeries::Normalization::DividedByInitial && initial > 0.0
                                    ? r.cost / initial
                                    : r.cost);
    }
    return series;
}

struct FileManifest {
    struct Entry {
        std::string name;
        std::uintmax_t bytes = 0;
    };
    std::vector<Entry> entries;
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary); // LF line endings everywhere
    if (!out) throw IoFailureError("cannot open " + path.string() + " for writing");
    return out;
}

inline void finish_file(FileManifest& manifest, const std::filesystem::path& path) {
    manifest.entries.push_back({path.filename().string(), std::filesystem::file_size(path)});
}

/// Simple deterministic FNV-1a hash used to fingerprint the resolved config.
inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string svg_color_for_density(double value, double max_value) {
    const double t = max_value > 0.0 ? std::min(1.0, value / max_value) : 0.0;
    // White through orange; matches the heat shading in the plots.
    const int r = 255;
    const int g = static_cast<int>(255.0 - 160.0 * t);
    const int b = static_cast<int>(255.0 - 235.0 * t);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", r, g, b);
    return buf;
}

} // namespace detail

inline void write_cost_csv(const SimTrace& trace, const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    out << "iteration,cost,sigma_min,min_cell_index\n";
    for (const TraceRecord& r : trace.records) {
        out << r.iteration << ',' << format_float(r.cost) << ',' << format_float(r.sigma_min) << ','
            << r.min_cell_index << '\n';
    }
}

inline void write_positions_csv(const SimTrace& trace, const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    out << "iteration,robot_id,x,y\n";
    for (const TraceRecord& r : trace.records) {
        for (std::size_t i = 0; i < r.positions.size(); ++i) {
            out << r.iteration << ',' << i << ',' << format_float(r.positions[i].x) << ','
                << format_float(r.positions[i].y) << '\n';
        }
    }
}

inline void write_weights_csv(const SimTrace& trace, const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    out << "iteration,cell_index,n_j,phi_j,sigma_j,sigma_hat_j\n";
    for (const TraceRecord& r : trace.records) {
        for (std::size_t j = 0; j < r.cells.size(); ++j) {
            const CellStat& cell = r.cells[j];
            out << r.iteration << ',' << j << ',' << cell.robot_count << ','
                << format_float(cell.mass_fraction) << ',' << format_float(cell.weight) << ','
                << format_float(cell.clamped_weight) << '\n';
        }
    }
}

inline void write_summary(const SimTrace& trace, std::uint64_t config_hash,
                          const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    char hash_hex[20];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx", static_cast<unsigned long long>(config_hash));
    out << "final_cost=" << format_float(trace.final_cost) << '\n'
        << "iterations=" << trace.iterations << '\n'
        << "converged=" << (trace.converged ? "true" : "false") << '\n'
        << "seed=" << trace.config.rng_seed << '\n'
        << "config_hash=" << hash_hex << '\n'
        << "rng_algorithm=" << RngStream::algorithm() << '\n'
        << "controller=" << controller_name(trace.config.controller) << '\n';
}

/// Robot paths over a density heat map, one polyline per ground robot.
inline void write_trajectories_svg(const SimTrace& trace, const std::filesystem::path& path) {
    const ScenarioConfig& config = trace.config;
    const double width_m = config.domain_hi.x - config.domain_lo.x;
    const double height_m = config.domain_hi.y - config.domain_lo.y;
    const double scale = 240.0; // px per meter
    const double width_px = width_m * scale;
    const double height_px = height_m * scale;
    const auto px = [&](Point2 p) {
        return Point2{(p.x - config.domain_lo.x) * scale, (config.domain_hi.y - p.y) * scale};
    };

    std::ofstream out = detail::open_output(path);
    char buf[256];
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                  "viewBox=\"0 0 %.0f %.0f\">\n",
                  width_px, height_px, width_px, height_px);
    out << buf;

    // Density heat shading on a coarse tile grid.
    const ConvexPolygon domain = config.domain_polygon();
    const QuadratureGrid shade_grid(domain, 64, 40);
    const DensityField field = config.density.build(domain, shade_grid);
    double max_phi = 0.0;
    std::vector<double> phi = shade_grid.sample_field(field);
    for (double v : phi) max_phi = std::max(max_phi, v);
    const double tile_w = width_m / 64.0 * scale;
    const double tile_h = height_m / 40.0 * scale;
    out << "<g stroke=\"none\">\n";
    for (std::size_t s = 0; s < shade_grid.centers().size(); ++s) {
        const Point2 top_left = px(shade_grid.centers()[s] + Point2{-width_m / 128.0, height_m / 80.0});
        std::snprintf(buf, sizeof(buf),
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"/>\n",
                      top_left.x, top_left.y, tile_w, tile_h,
                      detail::svg_color_for_density(phi[s], max_phi).c_str());
        out << buf;
    }
    out << "</g>\n";

    // Aerial cell boundaries, when present.
    for (const ConvexPolygon& cell : trace.aerial_diagram.cells) {
        out << "<polygon fill=\"none\" stroke=\"#444444\" stroke-width=\"2\" points=\"";
        for (const Point2& v : cell.vertices) {
            const Point2 p = px(v);
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", p.x, p.y);
            out << buf;
        }
        out << "\"/>\n";
    }

    // One path per robot, plus initial and final markers.
    const std::size_t n = trace.records.empty() ? 0 : trace.records.front().positions.size();
    for (std::size_t i = 0; i < n; ++i) {
        out << "<polyline class=\"robot-path\" fill=\"none\" stroke=\"#cc2222\" stroke-width=\"1.5\" "
               "stroke-dasharray=\"4 3\" points=\"";
        for (const TraceRecord& r : trace.records) {
            const Point2 p = px(r.positions[i]);
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", p.x, p.y);
            out << buf;
        }
        out << "\"/>\n";
        const Point2 first = px(trace.records.front().positions[i]);
        const Point2 last = px(trace.records.back().positions[i]);
        std::snprintf(buf, sizeof(buf),
                      "<path d=\"M %.2f %.2f l 8 8 m -8 0 l 8 -8\" stroke=\"black\" stroke-width=\"2\" "
                      "fill=\"none\"/>\n",
                      first.x - 4.0, first.y - 4.0);
        out << buf;
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"6\" stroke=\"#2244cc\" stroke-width=\"2\" "
                      "fill=\"none\"/>\n",
                      last.x, last.y);
        out << buf;
    }
    out << "</svg>\n";
}

inline void write_cost_svg(const CostSeries& cost, const std::filesystem::path& path) {
    const double width_px = 720.0;
    const double height_px = 420.0;
    const double margin = 50.0;
    double max_cost = 0.0;
    for (double v : cost.values) max_cost = std::max(max_cost, v);
    if (max_cost <= 0.0) max_cost = 1.0;
    const std::size_t count = std::max<std::size_t>(cost.values.size(), 2);

    std::ofstream out = detail::open_output(path);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
                  "width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                  width_px, height_px, width_px, height_px);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"white\" "
                  "stroke=\"#888888\"/>\n",
                  margin, margin, width_px - 2 * margin, height_px - 2 * margin);
    out << buf;
    out << "<polyline class=\"cost-curve\" fill=\"none\" stroke=\"#2244cc\" stroke-width=\"2\" points=\"";
    for (std::size_t t = 0; t < cost.values.size(); ++t) {
        const double x = margin + (width_px - 2 * margin) * static_cast<double>(t) /
                                      static_cast<double>(count - 1);
        const double y = height_px - margin - (height_px - 2 * margin) * (cost.values[t] / max_cost);
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
        out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"14\" font-family=\"sans-serif\">cost vs "
                  "iteration (max %.6g)</text>\n",
                  margin, margin - 12.0, max_cost);
    out << buf;
    out << "</svg>\n";
}

/// Writes the full output set for one run and returns the file manifest.
inline FileManifest emit_outputs(const SimTrace& trace, const CostSeries& cost,
                                 const std::filesystem::path& out_dir,
                                 std::uint64_t config_hash = 0) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoFailureError("cannot create output directory " + out_dir.string());

    FileManifest manifest;
    const auto emit = [&](const char* name, auto&& writer) {
        const std::filesystem::path path = out_dir / name;
        writer(path);
        detail::finish_file(manifest, path);
    };
    emit("cost.csv", [&](const auto& p) { write_cost_csv(trace, p); });
    emit("positions.csv", [&](const auto& p) { write_positions_csv(trace, p); });
    emit("weights.csv", [&](const auto& p) { write_weights_csv(trace, p); });
    emit("summary.txt", [&](const auto& p) { write_summary(trace, config_hash, p); });
    emit("trajectories.svg", [&](const auto& p) { write_trajectories_svg(trace, p); });
    emit("cost.svg", [&](const auto& p) { write_cost_svg(cost, p); });
    return manifest;
}

/// One K/N ratio entry of a sweep.
struct SweepRow {
    int k_aerial = 0;
    int n_ground = 0;
    double ratio = 0.0;
    double final_cost = 0.0;
    double normalized_cost = 0.0; // divided by the run's initial cost
    int iterations = 0;
    bool converged = false;
    bool failed = false;
    std::string error;
};

/// Runs every config and reports the steady-state normalized cost per row.
/// Rows that fail carry the error instead of aborting the sweep.
inline std::vector<SweepRow> final_cost_sweep(const std::vector<ScenarioConfig>& configs) {
    std::vector<SweepRow> rows;
    rows.reserve(configs.size());
    for (const ScenarioConfig& config : configs) {
        SweepRow row;
        row.k_aerial = config.k_aerial;
        row.n_ground = config.n_ground;
        row.ratio = static_cast<double>(config.k_aerial) / static_cast<double>(config.n_ground);
        try {
            const SimTrace trace = run(config);
            row.final_cost = trace.final_cost;
            const double initial = trace.records.front().cost;
            row.normalized_cost = initial > 0.0 ? trace.final_cost / initial : trace.final_cost;
            row.iterations = trace.iterations;
            row.converged = trace.converged;
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    out << "ratio,k_aerial,n_ground,final_cost,normalized_cost,iterations,converged,failed\n";
    for (const SweepRow& row : rows) {
        out << format_float(row.ratio) << ',' << row.k_aerial << ',' << row.n_ground << ','
            << format_float(row.final_cost) << ',' << format_float(row.normalized_cost) << ','
            << row.iterations << ',' << (row.converged ? "true" : "false") << ','
            << (row.failed ? "true" : "false") << '\n';
    }
}

} // namespace covsim
