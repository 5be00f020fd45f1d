#include "memlens/results.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace memlens {

std::vector<CurveSample> samples_from(std::span<const PointResult> points)
{
    std::vector<CurveSample> out;
    out.reserve(points.size() * 3);
    for (const auto& p : points) {
        if (!p.ok)
            continue;
        for (const auto& v : p.views) {
            CurveSample s;
            s.read_pct = p.read_pct;
            s.pacing = p.pacing;
            s.view = v.view;
            s.bandwidth_gbps = v.bandwidth_gbps;
            s.latency_ns = v.latency_ns;
            s.requests = v.requests;
            s.wall_cpu_cycles = p.wall_cpu_cycles;
            out.push_back(s);
        }
    }
    return out;
}

void write_csv(std::ostream& out, std::span<const CurveSample> samples)
{
    std::string buf = kCsvHeader;
    buf += '\n';
    for (const auto& s : samples) {
        fmt::format_to(std::back_inserter(buf), "{},{},{},{:.6f},", s.read_pct, s.pacing, to_string(s.view),
                       s.bandwidth_gbps);
        if (s.latency_ns)
            fmt::format_to(std::back_inserter(buf), "{:.6f}", *s.latency_ns);
        fmt::format_to(std::back_inserter(buf), ",{},{}\n", s.requests, s.wall_cpu_cycles);
    }
    out << buf;
}

namespace {

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos)
            return out;
        start = comma + 1;
    }
}

template <typename T>
T parse_uint(std::string_view text, std::size_t line, std::string_view column)
{
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw CsvError(fmt::format("line {}: column '{}': bad integer '{}'", line, column, text));
    return v;
}

double parse_real(std::string_view text, std::size_t line, std::string_view column)
{
    try {
        std::size_t pos = 0;
        const std::string s(text);
        const double v = std::stod(s, &pos);
        if (pos == s.size() && std::isfinite(v))
            return v;
    } catch (const std::exception&) {
    }
    throw CsvError(fmt::format("line {}: column '{}': bad number '{}'", line, column, text));
}

}  // namespace

std::vector<CurveSample> read_csv(std::istream& in)
{
    const auto expected = split(kCsvHeader);
    std::vector<CurveSample> out;
    std::string raw;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r')
            raw.pop_back();
        if (raw.empty() || raw.front() == '#')
            continue;
        const auto fields = split(raw);
        if (!header_seen) {
            for (const auto& col : expected)
                if (std::find(fields.begin(), fields.end(), col) == fields.end())
                    throw CsvError(fmt::format("line {}: missing column '{}'", line_no, col));
            for (const auto& col : fields)
                if (std::find(expected.begin(), expected.end(), col) == expected.end())
                    throw CsvError(fmt::format("line {}: unexpected column '{}'", line_no, col));
            if (fields.size() != expected.size() || !std::equal(fields.begin(), fields.end(), expected.begin()))
                throw CsvError(fmt::format("line {}: columns out of order, expected '{}'", line_no, kCsvHeader));
            header_seen = true;
            continue;
        }
        if (fields.size() != expected.size())
            throw CsvError(fmt::format("line {}: expected {} fields, got {}", line_no, expected.size(), fields.size()));
        CurveSample s;
        s.read_pct = parse_uint<std::uint32_t>(fields[0], line_no, expected[0]);
        s.pacing = parse_uint<std::uint32_t>(fields[1], line_no, expected[1]);
        try {
            s.view = parse_view(fields[2]);
        } catch (const std::invalid_argument& e) {
            throw CsvError(fmt::format("line {}: column 'view': {}", line_no, e.what()));
        }
        s.bandwidth_gbps = parse_real(fields[3], line_no, expected[3]);
        if (!fields[4].empty())
            s.latency_ns = parse_real(fields[4], line_no, expected[4]);
        s.requests = parse_uint<std::uint64_t>(fields[5], line_no, expected[5]);
        s.wall_cpu_cycles = parse_uint<std::uint64_t>(fields[6], line_no, expected[6]);
        out.push_back(s);
    }
    if (!header_seen)
        throw CsvError(fmt::format("missing header, expected '{}'", kCsvHeader));
    return out;
}

std::vector<MessCurve> curves_from_samples(std::span<const CurveSample> samples, View view)
{
    std::vector<MessCurve> curves;
    for (const auto& s : samples) {
        if (s.view != view || !s.latency_ns)
            continue;
        auto it = std::find_if(curves.begin(), curves.end(), [&](const MessCurve& c) { return c.read_pct == s.read_pct; });
        if (it == curves.end()) {
            curves.push_back(MessCurve{s.read_pct, view, {}, {}});
            it = curves.end() - 1;
        }
        it->pacing.push_back(s.pacing);
        it->points.emplace_back(s.bandwidth_gbps, *s.latency_ns);
    }
    return curves;
}

std::vector<MessCurve> curves_from_points(std::span<const PointResult> points, View view)
{
    const auto samples = samples_from(points);
    return curves_from_samples(samples, view);
}

CurveMetrics curve_metrics(const MessCurve& curve)
{
    if (curve.points.empty())
        throw std::invalid_argument(fmt::format("curve for {}% reads has no points", curve.read_pct));
    const auto by_bw = [](const auto& a, const auto& b) { return a.first < b.first; };
    const auto lo = std::min_element(curve.points.begin(), curve.points.end(), by_bw);
    const auto hi = std::max_element(curve.points.begin(), curve.points.end(), by_bw);
    return {lo->second, hi->first, hi->second};
}

std::optional<double> interpolate_latency(const MessCurve& reference, double bandwidth)
{
    auto pts = reference.points;
    if (pts.empty())
        return std::nullopt;
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (bandwidth < pts.front().first || bandwidth > pts.back().first)
        return std::nullopt;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto& [x0, y0] = pts[i - 1];
        const auto& [x1, y1] = pts[i];
        if (bandwidth > x1)
            continue;
        if (x1 == x0)
            return y1;
        return y0 + (y1 - y0) * (bandwidth - x0) / (x1 - x0);
    }
    return pts.back().second;
}

CompareReport compare(std::span<const MessCurve> candidate, std::span<const MessCurve> reference)
{
    CompareReport rep;
    double abs_sum = 0.0;
    std::size_t matched = 0;
    for (const auto& cand : candidate) {
        const auto ref = std::find_if(reference.begin(), reference.end(),
                                      [&](const MessCurve& r) { return r.read_pct == cand.read_pct; });
        if (ref == reference.end() || cand.points.empty() || ref->points.empty())
            continue;
        MixComparison m;
        m.read_pct = cand.read_pct;
        m.candidate = curve_metrics(cand);
        m.reference = curve_metrics(*ref);
        m.unloaded_latency_delta_ns = m.candidate.unloaded_latency_ns - m.reference.unloaded_latency_ns;
        m.max_bandwidth_delta_gbps = m.candidate.max_bandwidth_gbps - m.reference.max_bandwidth_gbps;
        m.saturated_latency_delta_ns = m.candidate.saturated_latency_ns - m.reference.saturated_latency_ns;
        double mix_sum = 0.0;
        for (const auto& [bw, lat] : cand.points) {
            if (const auto r = interpolate_latency(*ref, bw)) {
                mix_sum += std::abs(lat - *r);
                ++m.matched_points;
            }
        }
        if (m.matched_points > 0)
            m.mean_abs_latency_error_ns = mix_sum / double(m.matched_points);
        abs_sum += mix_sum;
        matched += m.matched_points;
        rep.mixes.push_back(m);
    }
    if (rep.mixes.empty())
        throw std::invalid_argument("candidate and reference share no read mix");
    for (const auto& m : rep.mixes) {
        rep.unloaded_latency_delta_ns += m.unloaded_latency_delta_ns;
        rep.max_bandwidth_delta_gbps += m.max_bandwidth_delta_gbps;
        rep.saturated_latency_delta_ns += m.saturated_latency_delta_ns;
    }
    const double n = double(rep.mixes.size());
    rep.unloaded_latency_delta_ns /= n;
    rep.max_bandwidth_delta_gbps /= n;
    rep.saturated_latency_delta_ns /= n;
    if (matched > 0)
        rep.mean_abs_latency_error_ns = abs_sum / double(matched);
    return rep;
}

void write_compare_report(std::ostream& out, const CompareReport& report)
{
    const auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("n/a"); };
    fmt::print(out, "{:>8} {:>12} {:>12} {:>12} {:>14} {:>8}\n", "read_pct", "d_unloaded", "d_max_bw", "d_saturated",
               "mean_abs_err", "matched");
    for (const auto& m : report.mixes)
        fmt::print(out, "{:>8} {:>12.3f} {:>12.3f} {:>12.3f} {:>14} {:>8}\n", m.read_pct, m.unloaded_latency_delta_ns,
                   m.max_bandwidth_delta_gbps, m.saturated_latency_delta_ns, opt(m.mean_abs_latency_error_ns),
                   m.matched_points);
    fmt::print(out, "{:>8} {:>12.3f} {:>12.3f} {:>12.3f} {:>14}\n", "all", report.unloaded_latency_delta_ns,
               report.max_bandwidth_delta_gbps, report.saturated_latency_delta_ns,
               opt(report.mean_abs_latency_error_ns));
}

}  // namespace memlens
