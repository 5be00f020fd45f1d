#include "memlens/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace memlens {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

// Step in {1, 2, 5} x 10^k giving at most `max_ticks` intervals over [0, hi].
double tick_step(double hi, int max_ticks)
{
    const double raw = hi / max_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw)
            return m * mag;
    return 10.0 * mag;
}

double nice_max(double v)
{
    if (!(v > 0.0))
        return 1.0;
    const double step = tick_step(v, 8);
    return std::ceil(v / step) * step;
}

std::string_view view_title(View v)
{
    switch (v) {
    case View::MemSim:
        return "Memory simulator view";
    case View::Interface:
        return "Memory interface view";
    case View::Application:
        return "Application view";
    }
    return "";
}

}  // namespace

std::string mix_color(std::uint32_t read_pct)
{
    constexpr std::array<double, 3> light{158, 202, 225};  // #9ecae1
    constexpr std::array<double, 3> dark{8, 48, 107};      // #08306b
    const double t = std::clamp((100.0 - double(read_pct)) / 50.0, 0.0, 1.0);
    std::array<int, 3> rgb{};
    for (std::size_t i = 0; i < 3; ++i)
        rgb[i] = static_cast<int>(std::lround(light[i] + (dark[i] - light[i]) * t));
    return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

std::string plot_svg(std::span<const MessCurve> curves, View view, const PlotBounds& bounds)
{
    if (curves.empty())
        throw std::invalid_argument("nothing to plot: no curves");

    double bw_hi = 0.0;
    double lat_hi = 0.0;
    for (const auto& c : curves)
        for (const auto& [bw, lat] : c.points) {
            bw_hi = std::max(bw_hi, bw);
            lat_hi = std::max(lat_hi, lat);
        }
    const double x_max = bounds.x_max.value_or(nice_max(bw_hi));
    const double y_max = bounds.y_max.value_or(nice_max(lat_hi));
    if (!(x_max > 0.0) || !(y_max > 0.0))
        throw std::invalid_argument("plot bounds must be positive");

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    const auto px = [&](double bw) { return kLeft + std::clamp(bw / x_max, 0.0, 1.0) * pw; };
    const auto py = [&](double lat) { return kTop + ph - std::clamp(lat / y_max, 0.0, 1.0) * ph; };

    std::string s;
    auto out = std::back_inserter(s);
    fmt::format_to(out,
                   "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
                   "viewBox=\"0 0 {0:.0f} {1:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n",
                   kWidth, kHeight);
    fmt::format_to(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                   kLeft + pw / 2, view_title(view));

    // Grid and ticks.
    const double xs = tick_step(x_max, 8);
    for (int i = 0; i * xs <= x_max * (1 + 1e-9); ++i) {
        const double v = i * xs;
        fmt::format_to(out,
                       "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#e0e0e0\"/>\n"
                       "<text x=\"{0:.2f}\" y=\"{3:.2f}\" text-anchor=\"middle\">{4:g}</text>\n",
                       px(v), kTop, kTop + ph, kTop + ph + 16, v);
    }
    const double ys = tick_step(y_max, 8);
    for (int i = 0; i * ys <= y_max * (1 + 1e-9); ++i) {
        const double v = i * ys;
        fmt::format_to(out,
                       "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#e0e0e0\"/>\n"
                       "<text x=\"{3:.2f}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:g}</text>\n",
                       kLeft, py(v), kLeft + pw, kLeft - 6, py(v) + 4, v);
    }
    fmt::format_to(out, "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                   kLeft, kTop, pw, ph);
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">Used bandwidth [GB/s]</text>\n",
                   kLeft + pw / 2, kHeight - 15);
    fmt::format_to(out,
                   "<text x=\"18\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.1f})\">"
                   "Latency [ns]</text>\n",
                   kTop + ph / 2);

    // Curves, most reads first so darker curves draw on top.
    std::vector<const MessCurve*> order;
    for (const auto& c : curves)
        order.push_back(&c);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->read_pct > b->read_pct; });
    double ly = kTop + 10;
    for (const auto* c : order) {
        const auto color = mix_color(c->read_pct);
        fmt::format_to(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"", color);
        for (std::size_t i = 0; i < c->points.size(); ++i)
            fmt::format_to(out, "{}{:.2f},{:.2f}", i ? " " : "", px(c->points[i].first), py(c->points[i].second));
        fmt::format_to(out, "\"/>\n");
        const double lx = kLeft + pw + 15;
        fmt::format_to(out,
                       "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"3\"/>\n"
                       "<text x=\"{4:.2f}\" y=\"{5:.2f}\">{6}% reads</text>\n",
                       lx, ly, lx + 20, color, lx + 26, ly + 4, c->read_pct);
        ly += 18;
    }
    s += "</svg>\n";
    return s;
}

}  // namespace memlens
