#include "memlens/platform.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace memlens {

std::string_view to_string(ImmMode m) { return m == ImmMode::Fixed ? "fixed" : "controlled"; }
std::string_view to_string(WeaveExtension m) { return m == WeaveExtension::None ? "none" : "last_completion"; }
std::string_view to_string(Kernel k) { return k == Kernel::Chase ? "chase" : "traffic"; }
std::string_view to_string(TrafficPattern p) { return p == TrafficPattern::Random ? "random" : "unit"; }

Kernel EngineConfig::kernel_of(std::uint32_t core) const
{
    if (!kernels.empty())
        return kernels.at(core);
    return core == 0 ? Kernel::Chase : Kernel::Traffic;
}

MappingScheme PlatformConfig::resolved_scheme() const
{
    if (map.scheme)
        return *map.scheme;
    return map.kind == MapKind::XorHash ? default_xor_scheme(dram) : default_field_order_scheme(dram);
}

void PlatformConfig::validate() const
{
    if (!(clock.cpu_freq_mhz > 0.0) || !(clock.mem_freq_mhz > 0.0))
        throw std::invalid_argument("clock frequencies must be positive");
    dram.validate();
    const double tck_ps = 1e6 / clock.mem_freq_mhz;
    if (std::abs(tck_ps - dram.timing.tCK_ps) > 1e-6 * tck_ps)
        throw std::invalid_argument("timing tCK does not match mem_freq_mhz");
    if (backend == BackendKind::Fixed && fixed_latency_cycles == 0)
        throw std::invalid_argument("fixed_latency_cycles must be at least 1");
    hierarchy.caches.validate();
    hierarchy.noc.validate(engine.cores);
    if (hierarchy.prefetch.threshold > 3)
        throw std::invalid_argument("pf_threshold must be within 0..3");
    if (hierarchy.prefetch.enable && (hierarchy.prefetch.degree == 0 || hierarchy.prefetch.table_entries == 0))
        throw std::invalid_argument("pf_degree and the prefetch table size must be positive");
    AddressMap(resolved_scheme(), dram);

    if (engine.window_cycles == 0)
        throw std::invalid_argument("window_cycles must be positive");
    if (engine.imm_initial_ns && !(*engine.imm_initial_ns >= 0.0))
        throw std::invalid_argument("imm_initial_ns must be non-negative");
    if (engine.imm_fixed_cycles == 0)
        throw std::invalid_argument("imm_fixed_cycles must be at least 1");
    if (engine.cores == 0)
        throw std::invalid_argument("cores must be positive");
    if (!engine.kernels.empty() && engine.kernels.size() != engine.cores)
        throw std::invalid_argument(
            fmt::format("kernels lists {} entries for {} cores", engine.kernels.size(), engine.cores));

    if (sweep.read_pcts.empty() || sweep.pacing_levels.empty())
        throw std::invalid_argument("sweep needs at least one read_pct and one pacing level");
    for (auto p : sweep.read_pcts)
        if (p > 100)
            throw std::invalid_argument(fmt::format("read_pct {} outside 0..100", p));
    if (sweep.windows_per_point == 0)
        throw std::invalid_argument("windows_per_point must be positive");
}

PlatformConfig desk_platform() { return PlatformConfig{}; }

PlatformConfig full_platform()
{
    PlatformConfig p;
    p.dram.channels = 6;
    p.dram.rows_per_bank = 131072;
    p.hierarchy.caches.llc = {33ull * 1024 * 1024, 11, 31};
    p.engine.cores = 24;
    return p;
}

}  // namespace memlens
