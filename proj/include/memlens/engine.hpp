#pragma once

#include "memlens/addr_map.hpp"
#include "memlens/clock_coupler.hpp"
#include "memlens/hierarchy.hpp"
#include "memlens/memory_backend.hpp"
#include "memlens/platform.hpp"
#include "memlens/workload.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

namespace memlens {

/// Exponentially weighted estimate of the memory latency that the bound
/// phase charges to every miss.
class ImmediateLatencyController {
public:
    static constexpr double kPrevWeight = 0.95;
    static constexpr double kMeasWeight = 0.05;

    // The estimate starts at one CPU cycle.
    explicit ImmediateLatencyController(double cpu_period_ns);
    ImmediateLatencyController(double cpu_period_ns, double initial_ns);

    double update(double measured_ns);
    double estimate_ns() const { return estimate_ns_; }
    // Nearest whole CPU cycles, at least one.
    std::uint32_t cycles() const;

private:
    double cpu_period_ns_;
    double estimate_ns_;
};

struct BoundTrace {
    std::uint64_t window = 0;
    std::uint64_t start_cycle = 0;
    std::uint32_t imm_cycles = 1;
    std::vector<MemRequest> requests;  // arrive_cpu_cycle = bound issue + hierarchy latency
    std::vector<std::uint64_t> bound_issue;
    std::vector<std::uint64_t> loads_per_core;
    std::uint64_t chase_loads = 0;
    std::uint64_t demand_ops = 0;  // demand requests sent towards memory
};

struct WindowReport {
    std::uint64_t index = 0;
    std::uint64_t start_cycle = 0;
    std::uint64_t wall_cycles = 0;  // CPU cycles
    std::uint64_t dram_cycles = 0;  // memory ticks delivered in the window
    std::uint32_t imm_cycles = 1;   // bound-phase latency used
    double estimate_ns = 0.0;       // controller state after the window
    std::optional<double> avg_mem_latency_ns;
    std::uint64_t chase_loads = 0;
    std::uint32_t chase_cores = 0;
    std::uint64_t demand_ops = 0;
    std::vector<MemRequest> completed;
};

/// Windowed bound/weave simulation of the cores, cache hierarchy and memory.
///
/// The bound phase runs every core through one window against a memory that
/// answers each miss after the immediate latency. The weave phase then
/// replays the recorded misses into the memory backend cycle by cycle at
/// their bound-phase times; their issue times are not revised.
class Engine {
public:
    Engine(const PlatformConfig& cfg, std::uint32_t read_pct, std::uint32_t pacing, std::uint64_t seed);

    BoundTrace run_bound_window();
    WindowReport run_weave(BoundTrace trace);
    // Bound, weave, then the controller update.
    WindowReport step();

    const PlatformConfig& config() const { return cfg_; }
    const ClockCoupler& coupler() const { return coupler_; }
    MemoryBackend& backend() { return *backend_; }
    const Hierarchy& hierarchy() const { return hierarchy_; }
    const ImmediateLatencyController& controller() const { return controller_; }
    std::uint32_t imm_cycles() const;
    std::uint64_t windows_run() const { return window_; }
    // Requests waiting for the interface or inside the backend.
    std::size_t in_transit() const;

private:
    struct CoreState {
        Kernel kernel;
        std::uint64_t t = 0;  // next cycle at which the core can act
        std::uint64_t pc = 0;
        MshrFile mshr;
        std::optional<ChaseState> chase;
        std::optional<TrafficGen> gen;
    };

    struct ArrivesLater {
        bool operator()(const MemRequest& a, const MemRequest& b) const
        {
            return a.arrive_cpu_cycle != b.arrive_cpu_cycle ? a.arrive_cpu_cycle > b.arrive_cpu_cycle : a.id > b.id;
        }
    };

    void emit(BoundTrace& trace, std::uint32_t core, std::uint64_t line, bool is_write, Origin origin,
              std::uint64_t issue, std::uint32_t latency);
    void run_chase(std::uint32_t core, BoundTrace& trace, std::uint64_t end);
    void run_traffic(std::uint32_t core, BoundTrace& trace, std::uint64_t end);
    void shift_cores(std::uint64_t delta);

    PlatformConfig cfg_;
    ClockCoupler coupler_;
    std::unique_ptr<MemoryBackend> backend_;
    AddressMap map_;
    Hierarchy hierarchy_;
    ImmediateLatencyController controller_;
    std::vector<CoreState> cores_;

    std::priority_queue<MemRequest, std::vector<MemRequest>, ArrivesLater> pending_;
    std::vector<std::deque<MemRequest>> retry_;  // per (channel, is_write)
    std::vector<MemOp> emitted_;
    std::vector<MemRequest> done_buf_;
    std::uint64_t next_id_ = 0;
    std::uint64_t window_ = 0;
};

}  // namespace memlens
