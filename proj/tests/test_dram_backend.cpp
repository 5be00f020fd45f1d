#include "memlens/memory_backend.hpp"
#include "memlens/timing_checker.hpp"

#include "doctest.h"

#include <map>
#include <random>
#include <set>

using namespace memlens;

namespace {

DramConfig toy_config()
{
    DramConfig cfg;
    cfg.channels = 1;
    cfg.ranks_per_dimm = 1;
    cfg.banks_per_rank = 4;
    cfg.rows_per_bank = 16;
    cfg.columns_per_row = 8;
    cfg.read_queue_depth = 8;
    cfg.write_queue_depth = 8;
    cfg.write_drain_high = 6;
    cfg.write_drain_low = 2;
    auto& t = cfg.timing;
    t.tCL = 2;
    t.tCWL = 2;
    t.tRCD = 2;
    t.tRP = 2;
    t.tRAS = 5;
    t.tRC = 7;
    t.tCCD = 2;
    t.tRTP = 2;
    t.tWR = 2;
    t.tWTR = 1;
    t.tRRD = 1;
    t.tFAW = 4;
    t.tBURST = 2;
    t.tREFI = 0;
    t.tRFC = 0;
    return cfg;
}

MemRequest make_req(std::uint64_t id, DramCoord c, bool is_write = false)
{
    MemRequest r;
    r.id = id;
    r.line_addr = (std::uint64_t(c.bank) << 20) | (std::uint64_t(c.row) << 8) | c.column;
    r.coord = c;
    r.is_write = is_write;
    return r;
}

// Ticks until request `id` completes; returns its completion cycle.
std::uint64_t run_until_done(MemoryBackend& be, std::uint64_t id, std::uint64_t limit = 10000)
{
    std::vector<MemRequest> done;
    for (std::uint64_t i = 0; i < limit; ++i) {
        done.clear();
        be.tick(done);
        for (const auto& r : done)
            if (r.id == id)
                return r.done_dram_cycle;
    }
    FAIL("request never completed");
    return 0;
}

void tick_to(MemoryBackend& be, std::uint64_t cycle)
{
    std::vector<MemRequest> sink;
    while (be.now() < cycle)
        be.tick(sink);
}

}  // namespace

TEST_CASE("admission and back-pressure")
{
    auto cfg = toy_config();
    cfg.read_queue_depth = 1;
    DdrBackend be(cfg);
    CHECK(be.enqueue(make_req(1, {0, 0, 0, 1, 0})) == EnqueueResult::Accepted);
    CHECK(be.enqueue(make_req(2, {0, 0, 1, 1, 0})) == EnqueueResult::Rejected);
    CHECK_THROWS_AS(be.enqueue(make_req(3, {0, 0, 9, 1, 0})), std::invalid_argument);
}

TEST_CASE("closed-bank read completes after schedule + tRCD + tCL + tBURST")
{
    DdrBackend be(toy_config());
    tick_to(be, 10);
    be.enqueue(make_req(1, {0, 0, 0, 3, 0}));
    CHECK(run_until_done(be, 1) == 10 + 7);
}

TEST_CASE("row hit after the row is open costs schedule + tCL + tBURST")
{
    DdrBackend be(toy_config());
    be.enqueue(make_req(1, {0, 0, 0, 3, 0}));
    run_until_done(be, 1);
    const auto enq = be.now();
    be.enqueue(make_req(2, {0, 0, 0, 3, 1}));
    CHECK(run_until_done(be, 2) == enq + 1 + 2 + 2);
}

TEST_CASE("row conflict precharges first, respecting tRAS")
{
    DdrBackend be(toy_config());
    be.set_trace_enabled(true);
    be.enqueue(make_req(1, {0, 0, 0, 3, 0}));
    tick_to(be, 3);  // ACT@1, RD@3
    be.enqueue(make_req(2, {0, 0, 0, 5, 0}));
    const auto done = run_until_done(be, 2);
    CHECK(done >= 3 + 2 + 2 + 2 + 2);

    const auto& trace = be.command_trace();
    REQUIRE(trace.size() == 5);
    CHECK(trace[0].kind == CommandKind::ACT);
    CHECK(trace[2].kind == CommandKind::PRE);
    CHECK(trace[2].issue_cycle >= trace[0].issue_cycle + 5);
    CHECK(trace[2].issue_cycle == 6);
    CHECK(trace[3].kind == CommandKind::ACT);
    CHECK(trace[3].coord.row == 5);
    CHECK(done == 14);
    CHECK(verify_command_trace(trace, be.config().timing).empty());
}

TEST_CASE("read to a line with a queued write is forwarded")
{
    DdrBackend be(toy_config());
    be.set_trace_enabled(true);
    auto w = make_req(1, {0, 0, 2, 4, 1}, true);
    auto r = make_req(2, {0, 0, 2, 4, 1});
    REQUIRE(be.enqueue(w) == EnqueueResult::Accepted);
    REQUIRE(be.enqueue(r) == EnqueueResult::Accepted);
    std::vector<MemRequest> done;
    be.tick(done);
    REQUIRE(done.size() == 1);
    CHECK(done[0].id == 2);
    CHECK(done[0].forwarded);
    CHECK(done[0].done_dram_cycle == 1);
    for (const auto& cmd : be.command_trace())
        CHECK(!(cmd.kind == CommandKind::RD));
}

TEST_CASE("FR-FCFS prefers the younger row hit over an older conflict")
{
    DdrBackend be(toy_config());
    be.enqueue(make_req(1, {0, 0, 0, 3, 0}));
    run_until_done(be, 1);
    be.enqueue(make_req(2, {0, 0, 0, 7, 0}));  // conflict
    be.enqueue(make_req(3, {0, 0, 0, 3, 4}));  // hit
    auto cmd = be.pick_next_command(0);
    REQUIRE(cmd);
    CHECK(cmd->kind == CommandKind::RD);
    CHECK(cmd->coord.column == 4);
}

TEST_CASE("FR-FCFS picks the older of two row hits")
{
    DdrBackend be(toy_config());
    be.enqueue(make_req(1, {0, 0, 0, 3, 0}));
    run_until_done(be, 1);
    be.enqueue(make_req(2, {0, 0, 0, 3, 6}));
    be.enqueue(make_req(3, {0, 0, 0, 3, 4}));
    auto cmd = be.pick_next_command(0);
    REQUIRE(cmd);
    CHECK(cmd->coord.column == 6);
}

TEST_CASE("due refresh preempts queued requests")
{
    auto cfg = toy_config();
    cfg.timing.tREFI = 50;
    cfg.timing.tRFC = 10;
    DdrBackend be(cfg);
    be.set_trace_enabled(true);
    tick_to(be, 49);
    be.enqueue(make_req(1, {0, 0, 1, 2, 0}));
    std::vector<MemRequest> sink;
    be.tick(sink);
    REQUIRE(be.command_trace().size() == 1);
    CHECK(be.command_trace()[0].kind == CommandKind::REF);
    CHECK(be.command_trace()[0].issue_cycle == 50);
    const auto done = run_until_done(be, 1);
    CHECK(done >= 50 + 10 + 2 + 2 + 2);
    CHECK(verify_command_trace(be.command_trace(), cfg.timing).empty());
}

TEST_CASE("write drain starts at the high watermark")
{
    auto cfg = toy_config();
    DdrBackend be(cfg);
    // Keep a read pending so drain is triggered only by the watermark.
    be.enqueue(make_req(100, {0, 0, 3, 9, 0}));
    for (std::uint32_t i = 0; i < cfg.write_drain_high; ++i)
        be.enqueue(make_req(i + 1, {0, 0, i % 3, 1, i}, true));
    std::vector<MemRequest> sink;
    be.tick(sink);
    CHECK(be.write_mode(0));
}

TEST_CASE("unloaded closed-bank latency is constant")
{
    DdrBackend fresh(toy_config());
    std::set<std::uint64_t> closed;
    for (std::uint32_t b = 0; b < 4; ++b) {
        tick_to(fresh, fresh.now() + 40);
        const auto enq = fresh.now();
        fresh.enqueue(make_req(b + 1, {0, 0, b, 1, 0}));
        closed.insert(run_until_done(fresh, b + 1) - enq);
    }
    CHECK(closed.size() == 1);
    CHECK(*closed.begin() == 7);
}

TEST_CASE("randomized streams: clean traces and request conservation")
{
    DramConfig cfg;  // default DDR4-2666 timing, refresh on
    cfg.timing.tREFI = 2000;
    cfg.timing.tRFC = 200;
    cfg.rows_per_bank = 64;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        DdrBackend be(cfg);
        be.set_trace_enabled(true);
        std::mt19937_64 rng(seed);
        std::map<std::uint64_t, int> completions;
        std::set<std::uint64_t> accepted;
        std::vector<MemRequest> done;
        std::uint64_t next_id = 1;
        const int write_pct = int(seed * 7 % 60);
        for (int cyc = 0; cyc < 20000; ++cyc) {
            if (rng() % 3 == 0) {
                DramCoord c{std::uint32_t(rng() % cfg.channels), std::uint32_t(rng() % cfg.ranks()),
                            std::uint32_t(rng() % cfg.banks_per_rank), std::uint32_t(rng() % 4),
                            std::uint32_t(rng() % cfg.columns_per_row)};
                auto r = make_req(next_id, c, int(rng() % 100) < write_pct);
                r.line_addr = (std::uint64_t(c.channel) << 40) | (std::uint64_t(c.rank) << 36) | r.line_addr;
                if (be.enqueue(r) == EnqueueResult::Accepted)
                    accepted.insert(next_id);
                ++next_id;
            }
            done.clear();
            be.tick(done);
            for (const auto& r : done) {
                completions[r.id]++;
                REQUIRE(r.done_dram_cycle >= r.enq_dram_cycle);
            }
        }
        for (int i = 0; i < 100000 && be.outstanding() > 0; ++i) {
            done.clear();
            be.tick(done);
            for (const auto& r : done)
                completions[r.id]++;
        }
        CHECK(be.outstanding() == 0);
        CHECK(completions.size() == accepted.size());
        for (const auto& [id, n] : completions) {
            REQUIRE(n == 1);
            REQUIRE(accepted.count(id) == 1);
        }
        const auto violations = verify_command_trace(be.command_trace(), cfg.timing);
        INFO("seed " << seed << " first: " << (violations.empty() ? "" : format_violation(violations[0])));
        CHECK(violations.empty());
    }
}

TEST_CASE("peak bandwidth arithmetic")
{
    DramConfig cfg;
    cfg.channels = 6;
    CHECK(cfg.peak_bandwidth_gbps() == doctest::Approx(128.0).epsilon(1e-9));
    cfg.timing.tCK_ps = 1e6 / 1333.0;
    CHECK(cfg.peak_bandwidth_gbps() == doctest::Approx(127.968).epsilon(1e-5));
}

TEST_CASE("fixed-latency backend timing")
{
    auto cfg = toy_config();
    FixedLatencyBackend be(cfg, 100);
    tick_to(be, 5);
    be.enqueue(make_req(1, {0, 0, 0, 0, 0}));
    CHECK(run_until_done(be, 1) == 105);

    FixedLatencyBackend pair(cfg, 10);
    pair.enqueue(make_req(1, {0, 0, 0, 0, 0}));
    pair.enqueue(make_req(2, {0, 0, 1, 0, 0}));
    const auto a = run_until_done(pair, 1);
    const auto b = run_until_done(pair, 2);
    CHECK(b - a == cfg.timing.tBURST);
}

TEST_CASE("fixed-latency backend long-run throughput matches its cap")
{
    DramConfig cfg;  // 2 channels, tBURST 4, 750 ps
    FixedLatencyBackend be(cfg, 50);
    std::vector<MemRequest> done;
    std::uint64_t id = 0, completed = 0;
    const std::uint64_t cycles = 200000;
    for (std::uint64_t c = 0; c < cycles; ++c) {
        for (std::uint32_t ch = 0; ch < cfg.channels; ++ch)
            be.enqueue(make_req(++id, {ch, 0, 0, 0, 0}));
        done.clear();
        be.tick(done);
        completed += done.size();
    }
    const double gbps = completed * 64.0 / (cycles * cfg.timing.tCK_ps * 1e-12) / 1e9;
    const double cap = cfg.channels * 64.0 / (cfg.timing.tBURST * cfg.timing.tCK_ps * 1e-12) / 1e9;
    CHECK(be.peak_bandwidth_gbps() == doctest::Approx(cap));
    CHECK(gbps == doctest::Approx(cap).epsilon(0.01));
}

TEST_CASE("backend factory")
{
    DramConfig cfg;
    CHECK(make_backend(BackendKind::Ddr, cfg, 1)->name() == "ddr");
    CHECK(make_backend(BackendKind::Fixed, cfg, 100)->name() == "fixed");
    CHECK(parse_backend_kind("fixed") == BackendKind::Fixed);
    CHECK_THROWS(parse_backend_kind("hbm"));
}

TEST_CASE("a capped write burst hands the bus back to waiting reads")
{
    auto cfg = toy_config();
    DdrBackend be(cfg);
    be.enqueue(make_req(1000, {0, 0, 3, 9, 0}));
    std::uint64_t next = 1;
    std::vector<MemRequest> done;
    std::uint64_t read_done = 0;
    for (int cyc = 0; cyc < 400 && read_done == 0; ++cyc) {
        // Writes keep arriving so the queue never falls to the low watermark.
        while (be.write_queue_size(0) < cfg.write_queue_depth) {
            const auto i = std::uint32_t(next);
            be.enqueue(make_req(next++, {0, 0, i % 3, 1, i % cfg.columns_per_row}, true));
        }
        be.tick(done);
        for (const auto& r : done)
            if (r.id == 1000)
                read_done = be.now();
        done.clear();
    }
    REQUIRE(read_done > 0);
    // Well before the starvation cap: one burst of (high - low) writes, then the read.
    CHECK(read_done < 100);
}
