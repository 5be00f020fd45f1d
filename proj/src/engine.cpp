#include "memlens/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memlens {

namespace {

constexpr std::uint64_t kChasePc = 0x400000;
constexpr std::uint64_t kTrafficPc = 0x500000;
constexpr std::uint64_t kRegionGap = 521;  // lines

}  // namespace

// ---------------------------------------------------------------------------

ImmediateLatencyController::ImmediateLatencyController(double cpu_period_ns)
    : ImmediateLatencyController(cpu_period_ns, cpu_period_ns)
{
}

ImmediateLatencyController::ImmediateLatencyController(double cpu_period_ns, double initial_ns)
    : cpu_period_ns_(cpu_period_ns), estimate_ns_(std::max(initial_ns, cpu_period_ns))
{
    if (!(cpu_period_ns > 0.0))
        throw std::invalid_argument("CPU period must be positive");
}

double ImmediateLatencyController::update(double measured_ns)
{
    if (measured_ns < 0.0)
        throw std::invalid_argument("measured latency must be non-negative");
    estimate_ns_ = std::max(kPrevWeight * estimate_ns_ + kMeasWeight * measured_ns, cpu_period_ns_);
    return estimate_ns_;
}

std::uint32_t ImmediateLatencyController::cycles() const
{
    return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::llround(estimate_ns_ / cpu_period_ns_)));
}

// ---------------------------------------------------------------------------

Engine::Engine(const PlatformConfig& cfg, std::uint32_t read_pct, std::uint32_t pacing, std::uint64_t seed)
    : cfg_(cfg),
      coupler_(cfg.cpu_freq_hz(), cfg.mem_freq_hz(), cfg.clock.mode),
      backend_(make_backend(cfg.backend, cfg.dram, cfg.fixed_latency_cycles)),
      map_(cfg.resolved_scheme(), cfg.dram),
      hierarchy_(cfg.hierarchy.caches, cfg.hierarchy.noc, cfg.hierarchy.prefetch, cfg.engine.cores,
                 cfg.cpu_freq_hz(), cfg.dram.capacity_lines()),
      controller_(coupler_.cpu_period_ns(),
                  cfg_.engine.imm_initial_ns.value_or(static_cast<double>(backend_->unloaded_read_cycles()) *
                                                      coupler_.dram_period_ns())),
      retry_(std::size_t(cfg.dram.channels) * 2)
{
    cfg_.validate();
    if (read_pct > 100)
        throw std::invalid_argument("read_pct outside 0..100");

    // Disjoint regions: chase regions hold 4x the LLC, traffic regions 16x, so
    // neither is served from cache. A prime gap between regions keeps the
    // streams of different cores from walking the same banks in lockstep.
    const std::uint64_t llc_lines = cfg.hierarchy.caches.llc.size_bytes / 64;
    const std::uint64_t chase_lines = 4 * llc_lines;
    const std::uint64_t traffic_lines = 16 * llc_lines;
    std::uint64_t base = 0;
    for (std::uint32_t c = 0; c < cfg.engine.cores; ++c) {
        CoreState core{cfg.engine.kernel_of(c), 0, 0, MshrFile(cfg.hierarchy.caches.mshr_per_core), {}, {}};
        const auto core_seed = derive_seed(seed, c);
        if (core.kernel == Kernel::Chase) {
            core.pc = kChasePc + c;
            core.chase = build_chase(chase_lines, core_seed, base);
            base += chase_lines + kRegionGap;
        } else {
            core.pc = kTrafficPc + c;
            TrafficParams tp;
            tp.read_pct = read_pct;
            tp.pacing = pacing;
            tp.pattern = cfg.engine.traffic_pattern;
            tp.base = base;
            tp.region_lines = traffic_lines;
            core.gen.emplace(tp, core_seed);
            base += traffic_lines + kRegionGap;
        }
        cores_.push_back(std::move(core));
    }
    if (base > cfg.dram.capacity_lines())
        throw std::invalid_argument("workload regions exceed DRAM capacity");
}

std::uint32_t Engine::imm_cycles() const
{
    return cfg_.engine.imm_mode == ImmMode::Fixed ? cfg_.engine.imm_fixed_cycles : controller_.cycles();
}

std::size_t Engine::in_transit() const
{
    std::size_t n = pending_.size() + backend_->outstanding();
    for (const auto& q : retry_)
        n += q.size();
    return n;
}

void Engine::emit(BoundTrace& trace, std::uint32_t core, std::uint64_t line, bool is_write, Origin origin,
                  std::uint64_t issue, std::uint32_t latency)
{
    MemRequest r;
    r.id = next_id_++;
    r.line_addr = line;
    r.is_write = is_write;
    r.origin = origin;
    r.coord = map_.map(line);
    r.core = static_cast<int>(core);
    r.window = window_;
    r.arrive_cpu_cycle = issue + latency;
    trace.requests.push_back(r);
    trace.bound_issue.push_back(issue);
}

void Engine::run_chase(std::uint32_t core, BoundTrace& trace, std::uint64_t end)
{
    auto& st = cores_[core];
    const auto imm = trace.imm_cycles;
    while (st.t < end) {
        const auto line = st.chase->next();
        emitted_.clear();
        const auto res = hierarchy_.access(core, line, false, st.pc, st.t, imm, emitted_);
        ++trace.chase_loads;
        ++trace.loads_per_core[core];
        if (res.miss()) {
            emit(trace, core, line, false, Origin::Demand, st.t, res.latency);
            ++trace.demand_ops;
        }
        for (const auto& op : emitted_)
            emit(trace, core, op.line, op.is_write, op.origin, st.t, op.latency);
        // The next load depends on this one.
        st.t += res.latency + (res.miss() ? imm : 0);
    }
}

void Engine::run_traffic(std::uint32_t core, BoundTrace& trace, std::uint64_t end)
{
    auto& st = cores_[core];
    const auto imm = trace.imm_cycles;
    while (st.t < end) {
        // Miss slots are held while a request is outstanding at the memory
        // side, i.e. for the immediate latency.
        if (!st.mshr.available(st.t)) {
            st.t = std::max(st.t, st.mshr.next_release());
            continue;
        }
        if (st.gen->next_ready() > st.t) {
            st.t = st.gen->next_ready();
            continue;
        }
        const auto op = *st.gen->step(st.t);
        ++trace.loads_per_core[core];
        if (op.is_write) {
            // Streaming store: posted straight to memory.
            emit(trace, core, op.line, true, Origin::Demand, st.t, hierarchy_.miss_latency(core, op.line));
            st.mshr.allocate(st.t + imm);
            ++trace.demand_ops;
        } else {
            emitted_.clear();
            const auto res = hierarchy_.access(core, op.line, false, st.pc, st.t, imm, emitted_);
            if (res.miss()) {
                emit(trace, core, op.line, false, Origin::Demand, st.t, res.latency);
                st.mshr.allocate(st.t + imm);
                ++trace.demand_ops;
            }
            for (const auto& e : emitted_)
                emit(trace, core, e.line, e.is_write, e.origin, st.t, e.latency);
        }
        st.t = st.gen->next_ready();
    }
}

BoundTrace Engine::run_bound_window()
{
    BoundTrace trace;
    trace.window = window_;
    trace.start_cycle = coupler_.cur_cycle();
    trace.imm_cycles = imm_cycles();
    trace.loads_per_core.assign(cores_.size(), 0);
    const auto end = trace.start_cycle + cfg_.engine.window_cycles;
    for (std::uint32_t c = 0; c < cores_.size(); ++c) {
        if (cores_[c].kernel == Kernel::Chase)
            run_chase(c, trace, end);
        else
            run_traffic(c, trace, end);
    }
    return trace;
}

WindowReport Engine::run_weave(BoundTrace trace)
{
    WindowReport rep;
    rep.index = trace.window;
    rep.start_cycle = coupler_.cur_cycle();
    rep.imm_cycles = trace.imm_cycles;
    rep.chase_loads = trace.chase_loads;
    rep.chase_cores = static_cast<std::uint32_t>(
        std::count_if(cores_.begin(), cores_.end(), [](const CoreState& c) { return c.kernel == Kernel::Chase; }));
    rep.demand_ops = trace.demand_ops;

    std::uint64_t reads_left = 0;
    for (auto& r : trace.requests) {
        if (!r.is_write)
            ++reads_left;
        pending_.push(std::move(r));
    }

    const auto start_dram = coupler_.dram_cycle();
    const auto end = rep.start_cycle + cfg_.engine.window_cycles;
    const bool extend = cfg_.engine.weave_extension == WeaveExtension::LastCompletion;
    std::size_t queued = 0;
    for (const auto& q : retry_)
        queued += q.size();

    while (true) {
        const auto c = coupler_.cur_cycle();
        if (c >= end && (!extend || (reads_left == 0 && pending_.empty())))
            break;

        while (!pending_.empty() && pending_.top().arrive_cpu_cycle <= c) {
            const auto& r = pending_.top();
            retry_[std::size_t(r.coord.channel) * 2 + (r.is_write ? 1 : 0)].push_back(r);
            pending_.pop();
            ++queued;
        }
        if (queued > 0) {
            for (auto& q : retry_) {
                while (!q.empty()) {
                    q.front().enq_cpu_cycle = c;
                    if (backend_->enqueue(q.front()) != EnqueueResult::Accepted)
                        break;
                    q.pop_front();
                    --queued;
                }
            }
        }

        const auto ticks = coupler_.advance();
        for (std::uint64_t k = 0; k < ticks; ++k)
            backend_->tick(done_buf_);
        for (auto& r : done_buf_) {
            r.done_cpu_cycle = coupler_.cur_cycle();
            if (!r.is_write && r.window == trace.window && reads_left > 0)
                --reads_left;
            rep.completed.push_back(std::move(r));
        }
        done_buf_.clear();
    }

    rep.wall_cycles = coupler_.cur_cycle() - rep.start_cycle;
    rep.dram_cycles = coupler_.dram_cycle() - start_dram;
    if (rep.wall_cycles > cfg_.engine.window_cycles)
        shift_cores(rep.wall_cycles - cfg_.engine.window_cycles);

    double sum = 0.0;
    std::uint64_t n = 0;
    for (const auto& r : rep.completed) {
        if (r.is_write || r.origin != Origin::Demand)
            continue;
        sum += static_cast<double>(r.done_dram_cycle - r.enq_dram_cycle);
        ++n;
    }
    if (n > 0)
        rep.avg_mem_latency_ns = sum / double(n) * coupler_.dram_period_ns();
    ++window_;
    return rep;
}

void Engine::shift_cores(std::uint64_t delta)
{
    for (auto& st : cores_) {
        st.t += delta;
        st.mshr.shift(delta);
        if (st.gen)
            st.gen->shift(delta);
    }
    for (std::uint32_t c = 0; c < cores_.size(); ++c)
        hierarchy_.prefetch_slots(c).shift(delta);
}

WindowReport Engine::step()
{
    auto rep = run_weave(run_bound_window());
    if (cfg_.engine.imm_mode == ImmMode::Controlled && rep.avg_mem_latency_ns)
        controller_.update(*rep.avg_mem_latency_ns);
    rep.estimate_ns = controller_.estimate_ns();
    return rep;
}

}  // namespace memlens
