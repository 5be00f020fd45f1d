#include "memlens/memory_backend.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace memlens {

namespace {

// A row-conflict request older than this may close a row even while younger
// row hits to it are queued.
constexpr std::uint64_t kStarvationCycles = 512;

bool is_column(CommandKind kind) { return kind == CommandKind::RD || kind == CommandKind::WR; }

void bump(std::uint64_t& slot, std::uint64_t value) { slot = std::max(slot, value); }

}  // namespace

// ---------------------------------------------------------------------------
// DdrBackend

DdrBackend::DdrBackend(const DramConfig& cfg)
    : cfg_(cfg), delay_cycles_(cfg.controller_delay_cycles()), channels_(cfg.channels)
{
    cfg_.validate();
    const auto ranks = cfg_.ranks();
    for (auto& ch : channels_) {
        ch.ranks.resize(ranks);
        ch.banks.resize(std::size_t(ranks) * cfg_.banks_per_rank);
        for (std::uint32_t r = 0; r < ranks; ++r) {
            // Stagger refresh so the ranks of a channel are not blocked together.
            const auto refi = cfg_.timing.tREFI;
            ch.ranks[r].next_refresh_due = refi + std::uint64_t(refi) * r / ranks;
        }
        ch.readq.reserve(cfg_.read_queue_depth);
        ch.writeq.reserve(cfg_.write_queue_depth);
    }
}

std::uint64_t DdrBackend::unloaded_read_cycles() const
{
    const auto& t = cfg_.timing;
    return std::uint64_t(t.tRCD) + t.tCL + t.tBURST + delay_cycles_;
}

std::size_t DdrBackend::outstanding() const
{
    std::size_t n = 0;
    for (const auto& ch : channels_)
        n += ch.readq.size() + ch.writeq.size() + ch.inflight.size();
    return n;
}

std::optional<std::uint32_t> DdrBackend::open_row(const DramCoord& coord) const
{
    return bank(channels_.at(coord.channel), coord).open_row;
}

EnqueueResult DdrBackend::enqueue(MemRequest req)
{
    if (!coord_in_range(req.coord, cfg_))
        throw std::invalid_argument("request coordinate outside DRAM organization");

    auto& ch = channels_[req.coord.channel];
    const auto same_line = [&](const MemRequest& q) { return q.line_addr == req.line_addr; };
    const bool queued_write = std::any_of(ch.writeq.begin(), ch.writeq.end(), same_line);

    // Reads to a line with a pending write are served from the write queue;
    // writes to such a line merge into the queued one.
    if (queued_write) {
        req.enq_dram_cycle = now_;
        req.forwarded = true;
        ch.inflight.push_back({now_ + 1, std::move(req)});
        return EnqueueResult::Accepted;
    }

    auto& queue = req.is_write ? ch.writeq : ch.readq;
    const auto depth = req.is_write ? cfg_.write_queue_depth : cfg_.read_queue_depth;
    if (queue.size() >= depth)
        return EnqueueResult::Rejected;

    req.enq_dram_cycle = now_;
    queue.push_back(std::move(req));
    return EnqueueResult::Accepted;
}

CommandKind DdrBackend::next_command_for(const ChannelState& ch, const MemRequest& req) const
{
    const auto& b = bank(ch, req.coord);
    if (!b.open_row)
        return CommandKind::ACT;
    if (*b.open_row != req.coord.row)
        return CommandKind::PRE;
    return req.is_write ? CommandKind::WR : CommandKind::RD;
}

bool DdrBackend::is_legal(const ChannelState& ch, CommandKind kind, const DramCoord& c) const
{
    const auto& t = cfg_.timing;
    const auto& rk = ch.ranks[c.rank];
    if (now_ < rk.busy_until)
        return false;

    const auto& b = bank(ch, c);
    switch (kind) {
    case CommandKind::ACT:
        if (b.open_row || now_ < b.earliest[std::size_t(CommandKind::ACT)] || now_ < rk.earliest_act)
            return false;
        return rk.act_history.size() < 4 || now_ >= rk.act_history.front() + t.tFAW;
    case CommandKind::PRE:
        return b.open_row && now_ >= b.earliest[std::size_t(CommandKind::PRE)];
    case CommandKind::RD:
        return b.open_row == c.row && now_ >= b.earliest[std::size_t(CommandKind::RD)] &&
               now_ >= ch.earliest_rd;
    case CommandKind::WR:
        return b.open_row == c.row && now_ >= b.earliest[std::size_t(CommandKind::WR)] &&
               now_ >= ch.earliest_wr;
    case CommandKind::REF: {
        const auto first = ch.banks.begin() + std::ptrdiff_t(c.rank) * cfg_.banks_per_rank;
        const bool all_closed = std::none_of(first, first + cfg_.banks_per_rank,
                                             [](const BankState& s) { return s.open_row.has_value(); });
        return all_closed && now_ >= rk.earliest_ref;
    }
    }
    return false;
}

bool DdrBackend::row_hit_pending(const ChannelState& ch, const std::vector<MemRequest>& queue,
                                 const DramCoord& c) const
{
    const auto& b = bank(ch, c);
    return std::any_of(queue.begin(), queue.end(), [&](const MemRequest& q) {
        return q.coord.rank == c.rank && q.coord.bank == c.bank && b.open_row == q.coord.row;
    });
}

std::optional<DdrBackend::Choice> DdrBackend::choose(std::uint32_t channel)
{
    auto& ch = channels_[channel];

    // Refresh has absolute priority: close the rank's banks, then REF.
    for (std::uint32_t r = 0; r < cfg_.ranks(); ++r) {
        if (!ch.ranks[r].refresh_pending)
            continue;
        bool any_open = false;
        for (std::uint32_t b = 0; b < cfg_.banks_per_rank; ++b) {
            const DramCoord c{channel, r, b, 0, 0};
            if (!bank(ch, c).open_row)
                continue;
            any_open = true;
            if (is_legal(ch, CommandKind::PRE, c))
                return Choice{{CommandKind::PRE, {channel, r, b, *bank(ch, c).open_row, 0}, now_}};
        }
        const DramCoord rank_coord{channel, r, 0, 0, 0};
        if (!any_open && is_legal(ch, CommandKind::REF, rank_coord))
            return Choice{{CommandKind::REF, rank_coord, now_}};
    }

    // A write drain yields after high - low writes when reads are waiting;
    // the reads then get as many column commands before the next drain.
    const std::uint32_t burst = cfg_.write_drain_high - cfg_.write_drain_low;
    if (ch.write_mode) {
        const bool capped = ch.burst_count >= burst && !ch.readq.empty();
        if (ch.writeq.size() <= cfg_.write_drain_low || capped) {
            ch.write_mode = false;
            ch.read_turn = capped;
            ch.burst_count = 0;
        }
    } else {
        if (ch.read_turn && (ch.burst_count >= burst || ch.readq.empty()))
            ch.read_turn = false;
        if ((ch.writeq.size() >= cfg_.write_drain_high && !ch.read_turn) || (ch.readq.empty() && !ch.writeq.empty())) {
            ch.write_mode = true;
            ch.burst_count = 0;
        }
    }
    auto& queue = ch.write_mode ? ch.writeq : ch.readq;

    // First ready: the oldest row hit that can issue now.
    for (std::size_t i = 0; i < queue.size(); ++i) {
        const auto& req = queue[i];
        if (ch.ranks[req.coord.rank].refresh_pending)
            continue;
        const auto kind = next_command_for(ch, req);
        if (is_column(kind) && is_legal(ch, kind, req.coord))
            return Choice{{kind, req.coord, now_}, &queue, i};
    }
    // Then the oldest request whose row command can issue now.
    for (std::size_t i = 0; i < queue.size(); ++i) {
        const auto& req = queue[i];
        if (ch.ranks[req.coord.rank].refresh_pending)
            continue;
        const auto kind = next_command_for(ch, req);
        if (is_column(kind))
            continue;
        if (kind == CommandKind::PRE && row_hit_pending(ch, queue, req.coord) &&
            now_ - req.enq_dram_cycle < kStarvationCycles)
            continue;
        if (is_legal(ch, kind, req.coord)) {
            auto coord = req.coord;
            if (kind == CommandKind::PRE)
                coord.row = *bank(ch, coord).open_row;
            return Choice{{kind, coord, now_}, &queue, i};
        }
    }
    return std::nullopt;
}

std::optional<Command> DdrBackend::pick_next_command(std::uint32_t channel)
{
    if (channel >= channels_.size())
        throw std::out_of_range("channel index");
    if (auto choice = choose(channel))
        return choice->cmd;
    return std::nullopt;
}

void DdrBackend::issue(ChannelState& ch, const Choice& choice)
{
    const auto& t = cfg_.timing;
    const auto& cmd = choice.cmd;
    const auto& c = cmd.coord;
    const std::uint64_t at = now_;
    auto& rk = ch.ranks[c.rank];

    switch (cmd.kind) {
    case CommandKind::ACT: {
        auto& b = bank(ch, c);
        b.open_row = c.row;
        bump(b.earliest[std::size_t(CommandKind::RD)], at + t.tRCD);
        bump(b.earliest[std::size_t(CommandKind::WR)], at + t.tRCD);
        bump(b.earliest[std::size_t(CommandKind::PRE)], at + t.tRAS);
        bump(b.earliest[std::size_t(CommandKind::ACT)], at + t.tRC);
        bump(rk.earliest_act, at + t.tRRD);
        rk.act_history.push_back(at);
        if (rk.act_history.size() > 4)
            rk.act_history.pop_front();
        break;
    }
    case CommandKind::PRE: {
        auto& b = bank(ch, c);
        b.open_row.reset();
        bump(b.earliest[std::size_t(CommandKind::ACT)], at + t.tRP);
        bump(rk.earliest_ref, at + t.tRP);
        break;
    }
    case CommandKind::RD:
    case CommandKind::WR: {
        auto& b = bank(ch, c);
        const bool rd = cmd.kind == CommandKind::RD;
        if (rd) {
            bump(ch.earliest_rd, at + t.tCCD);
            bump(ch.earliest_wr, at + t.read_to_write());
            bump(b.earliest[std::size_t(CommandKind::PRE)], at + t.tRTP);
        } else {
            bump(ch.earliest_wr, at + t.tCCD);
            bump(ch.earliest_rd, at + t.write_to_read());
            bump(b.earliest[std::size_t(CommandKind::PRE)], at + t.write_to_precharge());
        }
        if (rd != ch.write_mode)
            ++ch.burst_count;
        const std::uint64_t done = rd ? at + t.tCL + t.tBURST + delay_cycles_ : at + t.tCWL + t.tBURST;
        auto& queue = *choice.queue;
        ch.inflight.push_back({done, std::move(queue[choice.index])});
        queue.erase(queue.begin() + std::ptrdiff_t(choice.index));
        break;
    }
    case CommandKind::REF: {
        rk.busy_until = at + t.tRFC;
        rk.refresh_pending = false;
        rk.next_refresh_due += t.tREFI;
        for (std::uint32_t b = 0; b < cfg_.banks_per_rank; ++b)
            bump(ch.banks[std::size_t(c.rank) * cfg_.banks_per_rank + b].earliest[std::size_t(CommandKind::ACT)],
                 at + t.tRFC);
        break;
    }
    }
    record(cmd);
}

void DdrBackend::tick(std::vector<MemRequest>& completed)
{
    ++now_;
    for (std::uint32_t channel = 0; channel < channels_.size(); ++channel) {
        auto& ch = channels_[channel];

        if (!ch.inflight.empty()) {
            auto keep = ch.inflight.begin();
            for (auto it = ch.inflight.begin(); it != ch.inflight.end(); ++it) {
                if (it->done_cycle <= now_) {
                    it->req.done_dram_cycle = it->done_cycle;
                    completed.push_back(std::move(it->req));
                } else {
                    if (keep != it)
                        *keep = std::move(*it);
                    ++keep;
                }
            }
            ch.inflight.erase(keep, ch.inflight.end());
        }

        if (cfg_.timing.tREFI != 0) {
            for (auto& rk : ch.ranks)
                if (now_ >= rk.next_refresh_due)
                    rk.refresh_pending = true;
        }

        if (ch.readq.empty() && ch.writeq.empty() &&
            std::none_of(ch.ranks.begin(), ch.ranks.end(), [](const RankState& r) { return r.refresh_pending; }))
            continue;
        if (auto choice = choose(channel))
            issue(ch, *choice);
    }
}

// ---------------------------------------------------------------------------
// FixedLatencyBackend

FixedLatencyBackend::FixedLatencyBackend(const DramConfig& cfg, std::uint32_t latency_cycles)
    : cfg_(cfg), latency_(latency_cycles), channels_(cfg.channels)
{
    cfg_.validate();
    if (latency_ == 0)
        throw std::invalid_argument("fixed latency must be at least one cycle");
}

std::size_t FixedLatencyBackend::outstanding() const
{
    std::size_t n = 0;
    for (const auto& ch : channels_)
        n += ch.inflight.size();
    return n;
}

double FixedLatencyBackend::peak_bandwidth_gbps() const
{
    return cfg_.channels * double(cfg_.line_bytes) / (cfg_.timing.tBURST * cfg_.timing.tCK_ps * 1e-12) / 1e9;
}

EnqueueResult FixedLatencyBackend::enqueue(MemRequest req)
{
    if (!coord_in_range(req.coord, cfg_))
        throw std::invalid_argument("request coordinate outside DRAM organization");
    auto& ch = channels_[req.coord.channel];
    if (req.is_write ? ch.writes >= cfg_.write_queue_depth : ch.reads >= cfg_.read_queue_depth)
        return EnqueueResult::Rejected;

    std::uint64_t done = now_ + latency_;
    if (ch.any_done)
        done = std::max(done, ch.last_done + cfg_.timing.tBURST);
    ch.last_done = done;
    ch.any_done = true;
    req.enq_dram_cycle = now_;
    req.done_dram_cycle = done;
    (req.is_write ? ch.writes : ch.reads)++;
    ch.inflight.push_back(std::move(req));
    return EnqueueResult::Accepted;
}

void FixedLatencyBackend::tick(std::vector<MemRequest>& completed)
{
    ++now_;
    for (auto& ch : channels_) {
        while (!ch.inflight.empty() && ch.inflight.front().done_dram_cycle <= now_) {
            auto& req = ch.inflight.front();
            (req.is_write ? ch.writes : ch.reads)--;
            completed.push_back(std::move(req));
            ch.inflight.pop_front();
        }
    }
}

// ---------------------------------------------------------------------------

std::string_view to_string(BackendKind kind) { return kind == BackendKind::Ddr ? "ddr" : "fixed"; }

BackendKind parse_backend_kind(std::string_view text)
{
    if (text == "ddr")
        return BackendKind::Ddr;
    if (text == "fixed")
        return BackendKind::Fixed;
    throw std::invalid_argument("unknown backend '" + std::string(text) + "'");
}

std::unique_ptr<MemoryBackend> make_backend(BackendKind kind, const DramConfig& cfg,
                                            std::uint32_t fixed_latency_cycles)
{
    if (kind == BackendKind::Fixed)
        return std::make_unique<FixedLatencyBackend>(cfg, fixed_latency_cycles);
    return std::make_unique<DdrBackend>(cfg);
}

}  // namespace memlens
