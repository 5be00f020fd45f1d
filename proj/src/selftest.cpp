#include "memlens/selftest.hpp"

#include "memlens/addr_map.hpp"
#include "memlens/clock_coupler.hpp"
#include "memlens/engine.hpp"
#include "memlens/harness.hpp"
#include "memlens/platform.hpp"
#include "memlens/results.hpp"
#include "memlens/workload.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace memlens {

namespace {

struct Check {
    const char* name;
    std::function<std::string()> run;  // empty string on success
};

std::string coupler_counts()
{
    ClockCoupler ps(2.1e9, 4e9 / 3, ClockMode::PsAccumulator);
    ClockCoupler ceil(2.1e9, 4e9 / 3, ClockMode::CeilRatio);
    for (int i = 0; i < 2'100'000; ++i) {
        ps.advance();
        ceil.advance();
    }
    const auto d = static_cast<std::int64_t>(ps.dram_cycle()) - 1'333'333;
    if (d < -1 || d > 1)
        return fmt::format("ps ticks {}", ps.dram_cycle());
    if (ceil.dram_cycle() != 1'050'000)
        return fmt::format("ceil ticks {}", ceil.dram_cycle());
    return {};
}

std::string mapping_bijective()
{
    const auto cfg = desk_platform().dram;
    for (const auto& scheme : {default_field_order_scheme(cfg), default_xor_scheme(cfg)}) {
        const AddressMap map(scheme, cfg);
        if (const auto r = verify_bijection(map, 1u << 16); !r.bijective)
            return fmt::format("lines {} and {} collide", r.a, r.b);
    }
    return {};
}

std::string controller_ratio()
{
    ImmediateLatencyController c(1.0, 10.0);
    double err = 80.0 - c.estimate_ns();
    for (int i = 0; i < 50; ++i) {
        c.update(80.0);
        const double next = 80.0 - c.estimate_ns();
        if (std::abs(next / err - 0.95) > 1e-9)
            return fmt::format("ratio {} at step {}", next / err, i);
        err = next;
    }
    return {};
}

std::string chase_single_cycle()
{
    auto chase = build_chase(4096, 3, 0);
    const auto start = chase.next();
    std::uint64_t steps = 1;
    while (chase.next() != start)
        ++steps;
    return steps == 4096 ? std::string() : fmt::format("cycle length {}", steps);
}

std::string short_sweep()
{
    auto cfg = desk_platform();
    cfg.engine.warmup_windows = 5;
    cfg.sweep.windows_per_point = 20;
    cfg.sweep.read_pcts = {100, 50};
    cfg.sweep.pacing_levels = {64, 0};
    SweepOptions opts;
    opts.point.check_trace = true;
    opts.threads = 1;
    const auto a = run_sweep(cfg, opts);
    const auto b = run_sweep(cfg, opts);
    const double cpu_ns = 1e3 / cfg.clock.cpu_freq_mhz;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& p = a[i];
        if (!p.ok)
            return fmt::format("point {}/{} failed: {}", p.read_pct, p.pacing, p.error);
        if (!p.violations.empty())
            return fmt::format("point {}/{}: {} timing violations", p.read_pct, p.pacing, p.violations.size());
        const auto& ms = p.views[0].latency_ns;
        const auto& ifc = p.views[1].latency_ns;
        if (ms && ifc && std::abs(*ms - *ifc) > cpu_ns)
            return fmt::format("point {}/{}: interface {} vs memsim {}", p.read_pct, p.pacing, *ifc, *ms);
    }
    std::ostringstream sa, sb;
    write_csv(sa, samples_from(a));
    write_csv(sb, samples_from(b));
    if (sa.str() != sb.str())
        return "two runs with one seed differ";
    std::istringstream in(sa.str());
    std::ostringstream again;
    write_csv(again, read_csv(in));
    if (again.str() != sa.str())
        return "CSV round trip differs";
    return {};
}

}  // namespace

bool run_selftest(std::ostream& out)
{
    const std::vector<Check> checks{
        {"clock coupler tick counts", coupler_counts},
        {"address maps bijective", mapping_bijective},
        {"controller error ratio 0.95", controller_ratio},
        {"pointer chase single cycle", chase_single_cycle},
        {"short sweep: timing, views, determinism, CSV", short_sweep},
    };
    bool all = true;
    for (const auto& c : checks) {
        std::string why;
        try {
            why = c.run();
        } catch (const std::exception& e) {
            why = e.what();
        }
        fmt::print(out, "{} {}{}\n", why.empty() ? "PASS" : "FAIL", c.name, why.empty() ? "" : ": " + why);
        all = all && why.empty();
    }
    return all;
}

}  // namespace memlens
