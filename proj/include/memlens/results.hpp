#pragma once

#include "memlens/harness.hpp"
#include "memlens/telemetry.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace memlens {

/// One row of the run CSV: a sweep point seen through one view.
struct CurveSample {
    std::uint32_t read_pct = 0;
    std::uint32_t pacing = 0;
    View view = View::MemSim;
    double bandwidth_gbps = 0.0;
    std::optional<double> latency_ns;
    std::uint64_t requests = 0;
    std::uint64_t wall_cpu_cycles = 0;

    bool operator==(const CurveSample&) const = default;
};

class CsvError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kCsvHeader = "read_pct,pacing,view,bandwidth_gbps,latency_ns,requests,wall_cpu_cycles";

// Three rows per successful point, in point order; failed points are skipped.
std::vector<CurveSample> samples_from(std::span<const PointResult> points);

// Header plus one LF-terminated row per sample, reals with 6 decimals.
void write_csv(std::ostream& out, std::span<const CurveSample> samples);
// Lines starting with '#' are ignored. Throws CsvError on schema or value errors.
std::vector<CurveSample> read_csv(std::istream& in);

// One curve per read_pct (first-appearance order) for `view`; points without
// a latency are left out.
std::vector<MessCurve> curves_from_samples(std::span<const CurveSample> samples, View view);
std::vector<MessCurve> curves_from_points(std::span<const PointResult> points, View view);

struct CurveMetrics {
    double unloaded_latency_ns = 0.0;  // at the lowest-bandwidth point
    double max_bandwidth_gbps = 0.0;
    double saturated_latency_ns = 0.0;  // at the max-bandwidth point
};

// Throws std::invalid_argument on a curve without points.
CurveMetrics curve_metrics(const MessCurve& curve);

// Reference latency at `bandwidth` by linear interpolation between the
// reference points sorted by bandwidth; empty outside their range.
std::optional<double> interpolate_latency(const MessCurve& reference, double bandwidth);

struct MixComparison {
    std::uint32_t read_pct = 0;
    CurveMetrics candidate;
    CurveMetrics reference;
    double unloaded_latency_delta_ns = 0.0;
    double max_bandwidth_delta_gbps = 0.0;
    double saturated_latency_delta_ns = 0.0;
    std::optional<double> mean_abs_latency_error_ns;
    std::size_t matched_points = 0;
};

/// Signed deltas are candidate - reference. Top-level deltas average the mixes;
/// the matched-bandwidth error pools the points of every mix.
struct CompareReport {
    double unloaded_latency_delta_ns = 0.0;
    double max_bandwidth_delta_gbps = 0.0;
    double saturated_latency_delta_ns = 0.0;
    std::optional<double> mean_abs_latency_error_ns;
    std::vector<MixComparison> mixes;
};

// Throws std::invalid_argument when no read_pct appears on both sides.
CompareReport compare(std::span<const MessCurve> candidate, std::span<const MessCurve> reference);

void write_compare_report(std::ostream& out, const CompareReport& report);

}  // namespace memlens
