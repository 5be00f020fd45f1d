#include "memlens/harness.hpp"

#include "memlens/engine.hpp"
#include "memlens/workload.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

namespace memlens {

std::uint64_t point_seed(std::uint64_t sweep_seed, std::uint32_t read_pct, std::uint32_t pacing)
{
    return derive_seed(sweep_seed, (std::uint64_t(read_pct) << 32) | pacing);
}

PointResult run_point(const PlatformConfig& cfg, std::uint32_t read_pct, std::uint32_t pacing,
                      const PointOptions& opts)
{
    PointResult res;
    res.read_pct = read_pct;
    res.pacing = pacing;
    try {
        Engine engine(cfg, read_pct, pacing, point_seed(cfg.sweep.seed, read_pct, pacing));
        engine.backend().set_trace_enabled(opts.check_trace || opts.keep_trace);

        const auto total = cfg.engine.warmup_windows + cfg.sweep.windows_per_point;
        for (std::uint32_t w = 0; w < total; ++w) {
            const auto rep = engine.step();
            const auto t = tally(rep);
            if (w >= cfg.engine.warmup_windows)
                res.totals += t;
            if (opts.keep_windows)
                res.windows.push_back({t, rep.imm_cycles, rep.estimate_ns, rep.avg_mem_latency_ns});
        }
        const auto& coupler = engine.coupler();
        res.views = summarize(res.totals, coupler.cpu_period_ns(), coupler.dram_period_ns());
        res.wall_cpu_cycles = res.totals.cpu_cycles;
        res.final_estimate_ns = engine.controller().estimate_ns();

        if (opts.check_trace || opts.keep_trace) {
            auto trace = engine.backend().take_command_trace();
            res.commands = trace.size();
            if (opts.check_trace)
                res.violations = verify_command_trace(trace, cfg.dram.timing);
            if (opts.keep_trace)
                res.trace = std::move(trace);
        }
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    return res;
}

unsigned default_thread_count()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MEMLENS_THREADS")) {
        try {
            const auto cap = std::stoul(env);
            if (cap > 0)
                n = std::min<unsigned>(n, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
        }
    }
    return n;
}

std::vector<PointResult> run_sweep(const PlatformConfig& cfg, const SweepOptions& opts)
{
    std::vector<std::pair<std::uint32_t, std::uint32_t>> jobs;
    for (auto rp : cfg.sweep.read_pcts)
        for (auto pc : cfg.sweep.pacing_levels)
            jobs.emplace_back(rp, pc);

    std::vector<PointResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++)
            results[i] = run_point(cfg, jobs[i].first, jobs[i].second, opts.point);
    };

    const unsigned threads = std::min<std::size_t>(opts.threads ? opts.threads : default_thread_count(), jobs.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }
    return results;
}

}  // namespace memlens
