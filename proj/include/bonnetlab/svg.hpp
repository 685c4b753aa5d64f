#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "bonnetlab/csv.hpp"
#include "bonnetlab/field.hpp"

namespace bonnetlab {

namespace detail {

// Fixed five-stop colormap (dark blue -> teal -> green -> yellow), linear in
// the normalized value. Deterministic integer channels.
inline std::string heat_color(double v01) {
    static constexpr std::array<std::array<int, 3>, 5> stops = {{
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    const double x = std::clamp(v01, 0.0, 1.0) * 4.0;
    const int seg = std::min(3, static_cast<int>(x));
    const double f = x - seg;
    std::array<int, 3> rgb{};
    for (int c = 0; c < 3; ++c)
        rgb[static_cast<std::size_t>(c)] = static_cast<int>(std::lround(
            stops[static_cast<std::size_t>(seg)][static_cast<std::size_t>(c)] * (1.0 - f) +
            stops[static_cast<std::size_t>(seg + 1)][static_cast<std::size_t>(c)] * f));
    return "rgb(" + std::to_string(rgb[0]) + "," + std::to_string(rgb[1]) + "," +
           std::to_string(rgb[2]) + ")";
}

} // namespace detail

/// Standalone SVG heatmap of a field: one rect per node on a linear color
/// scale, annotated with the min/max values. x1 runs left to right, x2
/// bottom to top. Output is byte-deterministic.
inline std::string render_heatmap_svg(const ScalarField2& field, const std::string& title) {
    const Grid2& g = field.grid();
    const int cell = 8;
    const int margin = 10;
    const int header = 40;
    const int width = margin * 2 + g.n1 * cell;
    const int height = header + margin * 2 + g.n2 * cell;

    double lo = field(0, 0), hi = field(0, 0);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            lo = std::min(lo, field(i, j));
            hi = std::max(hi, field(i, j));
        }
    const double span = (hi > lo) ? (hi - lo) : 1.0;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + std::to_string(margin) + "\" y=\"16\" font-family=\"monospace\" "
           "font-size=\"12\">" + title + "</text>\n";
    svg += "<text x=\"" + std::to_string(margin) + "\" y=\"32\" font-family=\"monospace\" "
           "font-size=\"11\">min=" + format_double(lo) + " max=" + format_double(hi) +
           "</text>\n";
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double v01 = (field(i, j) - lo) / span;
            const int x = margin + i * cell;
            const int y = header + margin + (g.n2 - 1 - j) * cell;
            svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
                   "\" width=\"" + std::to_string(cell) + "\" height=\"" + std::to_string(cell) +
                   "\" fill=\"" + detail::heat_color(v01) + "\"/>\n";
        }
    svg += "</svg>\n";
    return svg;
}

} // namespace bonnetlab
