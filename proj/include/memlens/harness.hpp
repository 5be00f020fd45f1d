#pragma once

#include "memlens/platform.hpp"
#include "memlens/telemetry.hpp"
#include "memlens/timing_checker.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace memlens {

struct PointOptions {
    bool check_trace = false;     // verify the DRAM command trace of the point
    bool keep_trace = false;      // return the command trace
    bool keep_windows = false;    // return every window's report summary
};

struct WindowRecord {
    WindowTotals totals;
    std::uint32_t imm_cycles = 0;
    double estimate_ns = 0.0;
    std::optional<double> measured_ns;
};

struct PointResult {
    std::uint32_t read_pct = 0;
    std::uint32_t pacing = 0;
    bool ok = false;
    std::string error;
    std::array<ViewSample, 3> views{};
    WindowTotals totals;  // measured windows only
    std::uint64_t wall_cpu_cycles = 0;
    double final_estimate_ns = 0.0;
    std::uint64_t commands = 0;
    std::vector<Violation> violations;
    std::vector<Command> trace;
    std::vector<WindowRecord> windows;  // warmup included
};

// Seed of the point (read_pct, pacing) under the sweep seed.
std::uint64_t point_seed(std::uint64_t sweep_seed, std::uint32_t read_pct, std::uint32_t pacing);

// Fresh engine, warmup discarded, measured windows summed into one sample per view.
PointResult run_point(const PlatformConfig& cfg, std::uint32_t read_pct, std::uint32_t pacing,
                      const PointOptions& opts = {});

struct SweepOptions {
    PointOptions point;
    unsigned threads = 0;  // 0: MEMLENS_THREADS or the hardware concurrency
};

// Points ordered by (read_pct index, pacing index) of the sweep config.
std::vector<PointResult> run_sweep(const PlatformConfig& cfg, const SweepOptions& opts = {});

unsigned default_thread_count();

/// One (bandwidth, latency) point per pacing level for a read mix and view.
struct MessCurve {
    std::uint32_t read_pct = 0;
    View view = View::MemSim;
    std::vector<std::uint32_t> pacing;
    std::vector<std::pair<double, double>> points;  // (GB/s, ns)
};

}  // namespace memlens
