#pragma once

#include "memlens/engine.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace memlens {

enum class View { MemSim, Interface, Application };

inline constexpr std::array<View, 3> kAllViews{View::MemSim, View::Interface, View::Application};

std::string_view to_string(View v);
View parse_view(std::string_view text);

struct ViewSample {
    View view = View::MemSim;
    std::uint64_t window = 0;
    std::optional<double> latency_ns;
    double bandwidth_gbps = 0.0;
    std::uint64_t requests = 0;
    double wall_ns = 0.0;  // time base of bandwidth_gbps in this view's clock
};

/// Raw per-window counts; summing them gives exact multi-window totals.
struct WindowTotals {
    std::uint64_t completions = 0;     // all completed requests, any origin
    std::uint64_t reads = 0;           // completed reads
    std::uint64_t read_dram_cycles = 0;  // sum of done_dram - enq_dram over reads
    std::uint64_t read_cpu_cycles = 0;   // sum of done_cpu - enq_cpu over reads
    std::uint64_t dram_cycles = 0;
    std::uint64_t cpu_cycles = 0;
    std::uint64_t chase_loads = 0;
    std::uint32_t chase_cores = 1;  // not summed
    std::uint64_t demand_ops = 0;

    WindowTotals& operator+=(const WindowTotals& o);
};

WindowTotals tally(const WindowReport& rep);

// MemSim, Interface and Application samples in that order.
std::array<ViewSample, 3> summarize(const WindowTotals& t, double cpu_period_ns, double dram_period_ns,
                                    std::uint64_t window = 0);

inline std::array<ViewSample, 3> summarize_window(const WindowReport& rep, const ClockCoupler& coupler)
{
    return summarize(tally(rep), coupler.cpu_period_ns(), coupler.dram_period_ns(), rep.index);
}

}  // namespace memlens
