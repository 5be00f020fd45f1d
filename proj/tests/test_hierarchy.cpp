#include "memlens/hierarchy.hpp"

#include "doctest.h"

#include <random>
#include <set>
#include <stdexcept>

using namespace memlens;

namespace {

CacheConfig small_caches()
{
    CacheConfig c;
    c.l1 = {8 * 64, 2, 4};    // 4 sets
    c.l2 = {32 * 64, 4, 10};  // 8 sets
    c.llc = {128 * 64, 8, 30};
    c.mshr_per_core = 4;
    return c;
}

constexpr double kCpuHz = 2.1e9;

}  // namespace

TEST_CASE("cache replaces the least recently used way")
{
    Cache c({2 * 64, 2, 1});  // one set, two ways
    CHECK_FALSE(c.insert(10, false, 0));
    CHECK_FALSE(c.insert(20, true, 0));
    CHECK(c.touch(10));
    const auto v = c.insert(30, false, 0);
    REQUIRE(v);
    CHECK(v->line == 20);
    CHECK(v->dirty);
    CHECK(c.contains(10));
    CHECK(c.contains(30));
    CHECK_FALSE(c.contains(20));
}

TEST_CASE("cache config rejects sizes not divisible by ways x line")
{
    CacheConfig c;
    c.l2.size_bytes = 1000;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = CacheConfig{};
    c.llc.latency = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("hit latencies sum the traversed levels")
{
    Hierarchy h(small_caches(), NocConfig{}, PrefetchConfig{}, 1, kCpuHz, 1u << 20);
    std::vector<MemOp> ops;
    const auto miss = h.access(0, 5, false, 1, 0, 100, ops);
    CHECK(miss.miss());
    CHECK(miss.latency == 4 + 10 + 30);
    CHECK(h.miss_latency(0, 5) == 44);

    // After the fill arrives (44 + 100) the line hits in L1.
    const auto hit = h.access(0, 5, false, 1, 1000, 100, ops);
    CHECK(hit.level == 1);
    CHECK(hit.latency == 4);
}

TEST_CASE("a hit on an in-flight line waits for the fill")
{
    Hierarchy h(small_caches(), NocConfig{}, PrefetchConfig{}, 1, kCpuHz, 1u << 20);
    std::vector<MemOp> ops;
    h.access(0, 7, false, 1, 0, 100, ops);
    const auto early = h.access(0, 7, false, 1, 10, 100, ops);
    CHECK(early.level == 1);
    CHECK(early.latency == 144 - 10);
}

TEST_CASE("L2 and LLC hits")
{
    Hierarchy h(small_caches(), NocConfig{}, PrefetchConfig{}, 1, kCpuHz, 1u << 20);
    std::vector<MemOp> ops;
    h.access(0, 0, false, 1, 0, 0, ops);
    // Lines 0, 4, 8 share L1 set 0 (2 ways): 0 is evicted from L1 but stays in L2.
    h.access(0, 4, false, 1, 0, 0, ops);
    h.access(0, 8, false, 1, 0, 0, ops);
    const auto l2 = h.access(0, 0, false, 1, 1000, 0, ops);
    CHECK(l2.level == 2);
    CHECK(l2.latency == 14);

    // Fill L2 set 0 (lines congruent mod 8) to push line 16 out to the LLC only.
    h.access(0, 16, false, 1, 2000, 0, ops);
    for (std::uint64_t l : {24, 32, 40, 48, 56})
        h.access(0, l, false, 1, 2000, 0, ops);
    const auto llc = h.access(0, 16, false, 1, 5000, 0, ops);
    CHECK(llc.level == 3);
    CHECK(llc.latency == 44);
}

TEST_CASE("mesh NoC round trip follows the hop count")
{
    NocConfig noc;
    noc.mode = NocMode::Mesh;
    noc.mesh_cols = 4;
    noc.mesh_rows = 4;
    noc.per_hop_cycles = 2;
    noc.base_cycles = 4;
    const NocModel m(noc, kCpuHz);
    CHECK(m.tile_latency({0, 0}, {2, 3}) == 24);
    CHECK(m.tile_latency({0, 0}, {0, 0}) == 4);
    // Slice = line mod tiles, row-major.
    CHECK(m.slice_tile(14) == std::pair<std::uint32_t, std::uint32_t>{2, 3});
    CHECK(m.latency(0, 14) == 24);
    CHECK(m.latency(0, 14 + 16) == 24);
}

TEST_CASE("mesh NoC latency is symmetric")
{
    NocConfig noc;
    noc.mode = NocMode::Mesh;
    noc.mesh_cols = 5;
    noc.mesh_rows = 3;
    noc.per_hop_cycles = 3;
    noc.base_cycles = 2;
    const NocModel m(noc, kCpuHz);
    for (std::uint32_t ax = 0; ax < 5; ++ax)
        for (std::uint32_t ay = 0; ay < 3; ++ay)
            for (std::uint32_t bx = 0; bx < 5; ++bx)
                for (std::uint32_t by = 0; by < 3; ++by)
                    CHECK(m.tile_latency({ax, ay}, {bx, by}) == m.tile_latency({bx, by}, {ax, ay}));
}

TEST_CASE("fixed NoC delay of 10 ns is 21 cycles at 2.1 GHz")
{
    NocConfig noc;
    noc.fixed_delay_ns = 10.0;
    const NocModel m(noc, kCpuHz);
    CHECK(m.fixed_cycles() == 21);
    Hierarchy h(small_caches(), noc, PrefetchConfig{}, 1, kCpuHz, 1u << 20);
    CHECK(h.miss_latency(0, 3) == 44 + 21);
}

TEST_CASE("NoC config validation")
{
    NocConfig noc;
    noc.mode = NocMode::Mesh;
    noc.core_tile = {{4, 0}};
    CHECK_THROWS_AS(noc.validate(1), std::invalid_argument);
    noc.core_tile = {{0, 0}};
    CHECK_THROWS_AS(noc.validate(2), std::invalid_argument);
    CHECK_NOTHROW(noc.validate(1));
    noc.fixed_delay_ns = -1;
    CHECK_THROWS_AS(noc.validate(1), std::invalid_argument);
}

TEST_CASE("stride prefetcher: unit stride confirmed on the third access")
{
    StridePrefetcher pf(PrefetchConfig{true, 2, 1, 2, 64});
    CHECK(pf.observe(0x40, 0).empty());
    CHECK(pf.observe(0x40, 1).empty());
    CHECK(pf.observe(0x40, 2) == std::vector<std::uint64_t>{3, 4});
    CHECK(pf.observe(0x40, 3) == std::vector<std::uint64_t>{4, 5});
}

TEST_CASE("stride prefetcher: distance and negative strides")
{
    StridePrefetcher pf(PrefetchConfig{true, 1, 4, 2, 64});
    pf.observe(1, 100);
    pf.observe(1, 98);
    CHECK(pf.observe(1, 96) == std::vector<std::uint64_t>{88});
    // A stride change resets confidence but keeps the entry.
    CHECK(pf.observe(1, 99).empty());
    CHECK(pf.observe(1, 102).empty());
    CHECK(pf.observe(1, 105) == std::vector<std::uint64_t>{117});
}

TEST_CASE("stride prefetcher: zero stride and random streams never emit")
{
    StridePrefetcher pf(PrefetchConfig{true, 2, 1, 2, 64});
    for (int i = 0; i < 10; ++i)
        CHECK(pf.observe(7, 42).empty());

    std::mt19937_64 rng(5);
    StridePrefetcher rnd(PrefetchConfig{true, 2, 1, 2, 64});
    std::uint64_t prev = 0;
    int emitted = 0;
    for (int i = 0; i < 10000; ++i) {
        std::uint64_t line = rng() % (1u << 24);
        if (line == prev)
            ++line;
        emitted += rnd.observe(9, line).empty() ? 0 : 1;
        prev = line;
    }
    CHECK(emitted == 0);
}

TEST_CASE("stride prefetcher table evicts the least recently used pc")
{
    StridePrefetcher pf(PrefetchConfig{true, 1, 1, 2, 2});
    pf.observe(1, 0);
    pf.observe(1, 1);
    pf.observe(2, 50);
    pf.observe(3, 80);  // evicts pc 1
    CHECK(pf.observe(1, 2).empty());  // retrained from scratch
    CHECK(pf.observe(1, 3).empty());
    CHECK(pf.observe(1, 4) == std::vector<std::uint64_t>{5});
}

TEST_CASE("MSHR file holds slots until their release cycle")
{
    MshrFile m(2);
    CHECK(m.available(0));
    m.allocate(10);
    m.allocate(5);
    CHECK_FALSE(m.available(4));
    CHECK(m.next_release() == 5);
    CHECK(m.available(5));
    CHECK(m.in_use() == 1);
    m.shift(100);
    CHECK(m.next_release() == 110);
}

TEST_CASE("prefetches fill L2 and are tagged as prefetch")
{
    PrefetchConfig pfc{true, 2, 1, 2, 64};
    Hierarchy h(small_caches(), NocConfig{}, pfc, 1, kCpuHz, 1u << 20);
    std::vector<MemOp> ops;
    for (std::uint64_t l = 0; l < 3; ++l)
        h.access(0, 100 + l, false, 9, 0, 50, ops);
    std::set<std::uint64_t> pf;
    for (const auto& op : ops)
        if (op.origin == Origin::Prefetch) {
            CHECK_FALSE(op.is_write);
            pf.insert(op.line);
        }
    CHECK(pf == std::set<std::uint64_t>{103, 104});
    CHECK(h.stats().prefetches_issued == 2);
    ops.clear();
    const auto r = h.access(0, 103, false, 9, 10000, 50, ops);
    CHECK(r.level == 2);
}

TEST_CASE("prefetches beyond the pool or capacity are not sent")
{
    PrefetchConfig pfc{true, 4, 1, 2, 64};
    auto caches = small_caches();
    caches.mshr_per_core = 4;  // two prefetch slots
    Hierarchy h(caches, NocConfig{}, pfc, 1, kCpuHz, 105);
    std::vector<MemOp> ops;
    for (std::uint64_t l = 0; l < 3; ++l)
        h.access(0, 98 + l, false, 9, 0, 50, ops);
    // Targets 101..104: two fit in the pool, the rest are dropped.
    CHECK(h.stats().prefetches_issued == 2);
    CHECK(h.stats().prefetches_dropped == 2);
    ops.clear();
    h.access(0, 101, false, 9, 0, 50, ops);  // targets 102..105; 105 is past capacity
    for (const auto& op : ops)
        CHECK(op.line < 105);
}

TEST_CASE("dirty data is never lost")
{
    auto caches = small_caches();
    Hierarchy h(caches, NocConfig{}, PrefetchConfig{}, 2, kCpuHz, 1u << 20);
    std::mt19937_64 rng(11);
    std::vector<MemOp> ops;
    std::uint64_t cycle = 0;
    for (int i = 0; i < 50000; ++i) {
        const auto core = static_cast<std::uint32_t>(rng() % 2);
        const std::uint64_t line = core * 100000 + rng() % 600;
        h.access(core, line, rng() % 3 == 0, 1, cycle, 20, ops);
        cycle += 3;
    }
    std::uint64_t wb = 0;
    for (const auto& op : ops)
        if (op.origin == Origin::Writeback) {
            CHECK(op.is_write);
            ++wb;
        }
    CHECK(wb == h.stats().writebacks);
    CHECK(h.stats().writebacks + h.dirty_lines() == h.stats().lines_dirtied);
    CHECK(h.stats().writebacks > 0);
}
