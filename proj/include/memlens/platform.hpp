#pragma once

#include "memlens/addr_map.hpp"
#include "memlens/clock_coupler.hpp"
#include "memlens/dram_types.hpp"
#include "memlens/hierarchy.hpp"
#include "memlens/memory_backend.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace memlens {

struct ClockConfig {
    double cpu_freq_mhz = 2100.0;
    double mem_freq_mhz = 4000.0 / 3.0;
    ClockMode mode = ClockMode::PsAccumulator;
};

struct MapConfig {
    MapKind kind = MapKind::XorHash;
    // Overrides the shipped default for `kind` when set.
    std::optional<MappingScheme> scheme;
};

struct HierarchyConfig {
    CacheConfig caches;
    NocConfig noc;
    PrefetchConfig prefetch;
};

enum class ImmMode { Fixed, Controlled };
enum class WeaveExtension { None, LastCompletion };
enum class Kernel { Chase, Traffic };
enum class TrafficPattern { Random, Unit };

std::string_view to_string(ImmMode m);
std::string_view to_string(WeaveExtension m);
std::string_view to_string(Kernel k);
std::string_view to_string(TrafficPattern p);

struct EngineConfig {
    std::uint32_t window_cycles = 1000;
    ImmMode imm_mode = ImmMode::Controlled;
    std::uint32_t imm_fixed_cycles = 1;
    // Controller start point; empty means the backend's unloaded read latency.
    std::optional<double> imm_initial_ns;
    std::uint32_t warmup_windows = 20;
    WeaveExtension weave_extension = WeaveExtension::None;
    std::uint32_t cores = 5;
    // One entry per core; empty means core 0 chases and the rest generate traffic.
    std::vector<Kernel> kernels;
    TrafficPattern traffic_pattern = TrafficPattern::Random;

    Kernel kernel_of(std::uint32_t core) const;
};

struct SweepConfig {
    std::vector<std::uint32_t> read_pcts{100, 90, 80, 70, 60, 50};
    std::vector<std::uint32_t> pacing_levels{512, 274, 147, 79, 42, 23, 12, 7, 4, 2, 1, 0};
    std::uint32_t windows_per_point = 180;  // measured windows, after warmup
    std::uint64_t seed = 1;
};

struct PlatformConfig {
    ClockConfig clock;
    DramConfig dram;
    BackendKind backend = BackendKind::Ddr;
    std::uint32_t fixed_latency_cycles = 60;
    MapConfig map;
    HierarchyConfig hierarchy;
    EngineConfig engine;
    SweepConfig sweep;

    double cpu_freq_hz() const { return clock.cpu_freq_mhz * 1e6; }
    double mem_freq_hz() const { return clock.mem_freq_mhz * 1e6; }
    MappingScheme resolved_scheme() const;

    // Throws std::invalid_argument naming the first broken constraint.
    void validate() const;
};

// Desk scale: 4 traffic cores + 1 chase core on two channels.
PlatformConfig desk_platform();
// Server scale: 24 cores on six channels.
PlatformConfig full_platform();

}  // namespace memlens
