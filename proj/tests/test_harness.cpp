#include "memlens/harness.hpp"
#include "memlens/results.hpp"

#include "doctest.h"

#include <algorithm>
#include <set>
#include <string>

using namespace memlens;

namespace {

PlatformConfig short_sweep()
{
    auto cfg = desk_platform();
    cfg.engine.warmup_windows = 5;
    cfg.sweep.windows_per_point = 20;
    cfg.sweep.read_pcts = {100, 50};
    cfg.sweep.pacing_levels = {64, 4, 0};
    return cfg;
}

bool same_point(const PointResult& a, const PointResult& b)
{
    if (a.read_pct != b.read_pct || a.pacing != b.pacing || a.ok != b.ok)
        return false;
    for (std::size_t v = 0; v < 3; ++v) {
        if (a.views[v].bandwidth_gbps != b.views[v].bandwidth_gbps ||
            a.views[v].latency_ns != b.views[v].latency_ns || a.views[v].requests != b.views[v].requests)
            return false;
    }
    return a.wall_cpu_cycles == b.wall_cpu_cycles;
}

}  // namespace

TEST_CASE("point seeds are distinct per point")
{
    std::set<std::uint64_t> seen;
    for (std::uint32_t rp : {100u, 90u, 50u})
        for (std::uint32_t pc : {0u, 1u, 512u})
            seen.insert(point_seed(1, rp, pc));
    CHECK(seen.size() == 9);
    CHECK(point_seed(1, 100, 0) != point_seed(2, 100, 0));
    CHECK(point_seed(7, 60, 4) == point_seed(7, 60, 4));
}

TEST_CASE("sweep returns points in read-mix then pacing order")
{
    const auto cfg = short_sweep();
    const auto pts = run_sweep(cfg, {.threads = 1});
    REQUIRE(pts.size() == 6);
    std::size_t i = 0;
    for (auto rp : cfg.sweep.read_pcts) {
        for (auto pc : cfg.sweep.pacing_levels) {
            CHECK(pts[i].read_pct == rp);
            CHECK(pts[i].pacing == pc);
            CHECK(pts[i].ok);
            ++i;
        }
    }
}

TEST_CASE("results do not depend on the thread count")
{
    const auto cfg = short_sweep();
    const auto one = run_sweep(cfg, {.threads = 1});
    const auto three = run_sweep(cfg, {.threads = 3});
    REQUIRE(one.size() == three.size());
    for (std::size_t i = 0; i < one.size(); ++i)
        CHECK(same_point(one[i], three[i]));
}

TEST_CASE("a failing point is reported instead of thrown")
{
    const auto cfg = short_sweep();
    const auto bad = run_point(cfg, 101, 8);
    CHECK_FALSE(bad.ok);
    CHECK(bad.error.find("read_pct") != std::string::npos);

    auto broken = cfg;
    broken.sweep.read_pcts = {100, 101};
    const auto pts = run_sweep(broken, {.threads = 2});
    REQUIRE(pts.size() == 6);
    for (const auto& p : pts) {
        CHECK_FALSE(p.ok);
        CHECK_FALSE(p.error.empty());
    }
    CHECK(samples_from(pts).empty());
}

TEST_CASE("measured windows only: totals cover windows_per_point windows")
{
    auto cfg = short_sweep();
    const auto p = run_point(cfg, 100, 8, {.keep_windows = true});
    REQUIRE(p.ok);
    REQUIRE(p.windows.size() == cfg.engine.warmup_windows + cfg.sweep.windows_per_point);
    WindowTotals sum;
    for (std::size_t w = cfg.engine.warmup_windows; w < p.windows.size(); ++w)
        sum += p.windows[w].totals;
    CHECK(sum.cpu_cycles == p.totals.cpu_cycles);
    CHECK(sum.reads == p.totals.reads);
    CHECK(p.wall_cpu_cycles == 20 * cfg.engine.window_cycles);
}

TEST_CASE("desk sweep: traces are legal, bandwidth bounded by the bus, curves well formed")
{
    auto cfg = desk_platform();
    cfg.sweep.read_pcts = {100, 50};
    const auto pts = run_sweep(cfg, {.point = {.check_trace = true}});
    const double peak = cfg.dram.peak_bandwidth_gbps();
    for (const auto& p : pts) {
        REQUIRE(p.ok);
        CHECK(p.violations.empty());
        CHECK(p.commands > 0);
        CHECK(p.views[0].bandwidth_gbps <= peak);
        CHECK(p.views[0].latency_ns.has_value());
    }

    const auto curves = curves_from_points(pts, View::MemSim);
    REQUIRE(curves.size() == 2);
    for (const auto& c : curves) {
        REQUIRE(c.points.size() == cfg.sweep.pacing_levels.size());
        // Bandwidth grows as pacing shrinks, allowing one noisy step.
        int dips = 0;
        for (std::size_t i = 1; i < c.points.size(); ++i)
            dips += c.points[i].first + 0.5 < c.points[i - 1].first ? 1 : 0;
        CHECK(dips <= 1);
        CHECK(c.points.back().second > c.points.front().second);
    }
    CHECK(curve_metrics(curves[0]).max_bandwidth_gbps > curve_metrics(curves[1]).max_bandwidth_gbps);
}

TEST_CASE("default thread count honours MEMLENS_THREADS bounds")
{
    CHECK(default_thread_count() >= 1);
}
