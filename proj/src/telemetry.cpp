#include "memlens/telemetry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace memlens {

namespace {

constexpr double kLineBytes = 64.0;

// Bytes per nanosecond is numerically GB/s.
double gbps(std::uint64_t lines, double ns) { return ns > 0.0 ? kLineBytes * double(lines) / ns : 0.0; }

}  // namespace

std::string_view to_string(View v)
{
    switch (v) {
    case View::MemSim:
        return "memsim";
    case View::Interface:
        return "interface";
    case View::Application:
        return "app";
    }
    return "?";
}

View parse_view(std::string_view text)
{
    for (auto v : kAllViews)
        if (to_string(v) == text)
            return v;
    throw std::invalid_argument("unknown view '" + std::string(text) + "'");
}

WindowTotals& WindowTotals::operator+=(const WindowTotals& o)
{
    completions += o.completions;
    reads += o.reads;
    read_dram_cycles += o.read_dram_cycles;
    read_cpu_cycles += o.read_cpu_cycles;
    dram_cycles += o.dram_cycles;
    cpu_cycles += o.cpu_cycles;
    chase_loads += o.chase_loads;
    chase_cores = std::max(chase_cores, o.chase_cores);
    demand_ops += o.demand_ops;
    return *this;
}

WindowTotals tally(const WindowReport& rep)
{
    WindowTotals t;
    t.completions = rep.completed.size();
    for (const auto& r : rep.completed) {
        if (r.is_write)
            continue;
        ++t.reads;
        t.read_dram_cycles += r.done_dram_cycle - r.enq_dram_cycle;
        t.read_cpu_cycles += r.done_cpu_cycle - r.enq_cpu_cycle;
    }
    t.dram_cycles = rep.dram_cycles;
    t.cpu_cycles = rep.wall_cycles;
    t.chase_loads = rep.chase_loads;
    t.chase_cores = rep.chase_cores;
    t.demand_ops = rep.demand_ops;
    return t;
}

std::array<ViewSample, 3> summarize(const WindowTotals& t, double cpu_period_ns, double dram_period_ns,
                                    std::uint64_t window)
{
    std::array<ViewSample, 3> out;

    auto& mem = out[0];
    mem.view = View::MemSim;
    mem.wall_ns = double(t.dram_cycles) * dram_period_ns;
    mem.bandwidth_gbps = gbps(t.completions, mem.wall_ns);
    mem.requests = t.completions;
    if (t.reads > 0)
        mem.latency_ns = double(t.read_dram_cycles) / double(t.reads) * dram_period_ns;

    auto& itf = out[1];
    itf.view = View::Interface;
    itf.wall_ns = double(t.cpu_cycles) * cpu_period_ns;
    itf.bandwidth_gbps = gbps(t.completions, itf.wall_ns);
    itf.requests = t.completions;
    if (t.reads > 0)
        itf.latency_ns = double(t.read_cpu_cycles) / double(t.reads) * cpu_period_ns;

    auto& app = out[2];
    app.view = View::Application;
    app.wall_ns = itf.wall_ns;
    app.bandwidth_gbps = gbps(t.demand_ops, app.wall_ns);
    app.requests = t.demand_ops;
    if (t.chase_loads > 0)
        app.latency_ns = app.wall_ns * t.chase_cores / double(t.chase_loads);

    for (auto& s : out)
        s.window = window;
    return out;
}

}  // namespace memlens
