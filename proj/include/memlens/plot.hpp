#pragma once

#include "memlens/harness.hpp"

#include <optional>
#include <span>
#include <string>

namespace memlens {

struct PlotBounds {
    std::optional<double> x_max;  // GB/s; default fits the data
    std::optional<double> y_max;  // ns
};

// Self-contained SVG of bandwidth-latency curves, one polyline per read mix,
// darker blue for more writes. Byte-identical output for identical input.
// Throws std::invalid_argument on an empty curve set.
std::string plot_svg(std::span<const MessCurve> curves, View view, const PlotBounds& bounds = {});

// "#rrggbb" shade for a read percentage: light at 100, darkest at 50 and below.
std::string mix_color(std::uint32_t read_pct);

}  // namespace memlens
