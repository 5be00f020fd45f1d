#pragma once

#include "memlens/dram_types.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace memlens {

enum class EnqueueResult { Accepted, Rejected };

/// Contract shared by every memory model the engine can drive. The caller
/// delivers exactly one tick() per memory cycle granted by the clock coupler.
class MemoryBackend {
public:
    virtual ~MemoryBackend() = default;

    // Stamps enq_dram_cycle = now() when accepted.
    virtual EnqueueResult enqueue(MemRequest req) = 0;

    // Advances one memory cycle and appends the requests that finished in it.
    virtual void tick(std::vector<MemRequest>& completed) = 0;

    virtual std::uint64_t now() const = 0;
    virtual std::size_t outstanding() const = 0;
    virtual std::string_view name() const = 0;
    // Latency of a lone read to a closed bank, in memory cycles.
    virtual std::uint64_t unloaded_read_cycles() const = 0;

    void set_trace_enabled(bool on) { trace_enabled_ = on; }
    bool trace_enabled() const { return trace_enabled_; }
    const std::vector<Command>& command_trace() const { return trace_; }
    std::vector<Command> take_command_trace() { return std::exchange(trace_, {}); }

protected:
    void record(const Command& cmd)
    {
        if (trace_enabled_)
            trace_.push_back(cmd);
    }

private:
    bool trace_enabled_ = false;
    std::vector<Command> trace_;
};

/// Cycle-level DDR4-style controller: open-page banks, FR-FCFS scheduling,
/// watermark write drain and per-rank refresh. One command per channel per
/// memory cycle.
class DdrBackend final : public MemoryBackend {
public:
    explicit DdrBackend(const DramConfig& cfg);

    EnqueueResult enqueue(MemRequest req) override;
    void tick(std::vector<MemRequest>& completed) override;
    std::uint64_t now() const override { return now_; }
    std::size_t outstanding() const override;
    std::string_view name() const override { return "ddr"; }
    std::uint64_t unloaded_read_cycles() const override;

    // Chooses, without issuing, the command the scheduler would issue on
    // `channel` at the current cycle. Updates the write-drain mode.
    std::optional<Command> pick_next_command(std::uint32_t channel);

    const DramConfig& config() const { return cfg_; }
    std::optional<std::uint32_t> open_row(const DramCoord& coord) const;
    bool write_mode(std::uint32_t channel) const { return channels_[channel].write_mode; }
    std::size_t read_queue_size(std::uint32_t channel) const { return channels_[channel].readq.size(); }
    std::size_t write_queue_size(std::uint32_t channel) const { return channels_[channel].writeq.size(); }

private:
    struct BankState {
        std::optional<std::uint32_t> open_row;
        std::array<std::uint64_t, kCommandKinds> earliest{};
    };

    struct RankState {
        std::deque<std::uint64_t> act_history;  // last four ACT cycles
        std::uint64_t earliest_act = 0;         // tRRD
        std::uint64_t earliest_ref = 0;         // PRE -> REF tRP
        std::uint64_t busy_until = 0;           // REF blackout
        std::uint64_t next_refresh_due = 0;
        bool refresh_pending = false;
    };

    struct InFlight {
        std::uint64_t done_cycle;
        MemRequest req;
    };

    struct ChannelState {
        std::vector<MemRequest> readq;
        std::vector<MemRequest> writeq;
        std::vector<InFlight> inflight;
        std::vector<RankState> ranks;
        std::vector<BankState> banks;
        bool write_mode = false;
        bool read_turn = false;         // reads owed a burst after a capped drain
        std::uint32_t burst_count = 0;  // column commands of the current mode
        std::uint64_t earliest_rd = 0;
        std::uint64_t earliest_wr = 0;
    };

    struct Choice {
        Command cmd;
        std::vector<MemRequest>* queue = nullptr;
        std::size_t index = 0;
    };

    BankState& bank(ChannelState& ch, const DramCoord& c) { return ch.banks[c.rank * cfg_.banks_per_rank + c.bank]; }
    const BankState& bank(const ChannelState& ch, const DramCoord& c) const
    {
        return ch.banks[c.rank * cfg_.banks_per_rank + c.bank];
    }

    CommandKind next_command_for(const ChannelState& ch, const MemRequest& req) const;
    bool is_legal(const ChannelState& ch, CommandKind kind, const DramCoord& c) const;
    bool row_hit_pending(const ChannelState& ch, const std::vector<MemRequest>& queue, const DramCoord& c) const;
    std::optional<Choice> choose(std::uint32_t channel);
    void issue(ChannelState& ch, const Choice& choice);

    DramConfig cfg_;
    std::uint32_t delay_cycles_;
    std::uint64_t now_ = 0;
    std::vector<ChannelState> channels_;
};

/// Alternate backend: every request completes a fixed number of memory cycles
/// after enqueue, capped at one completion per channel per tBURST cycles.
class FixedLatencyBackend final : public MemoryBackend {
public:
    FixedLatencyBackend(const DramConfig& cfg, std::uint32_t latency_cycles);

    EnqueueResult enqueue(MemRequest req) override;
    void tick(std::vector<MemRequest>& completed) override;
    std::uint64_t now() const override { return now_; }
    std::size_t outstanding() const override;
    std::string_view name() const override { return "fixed"; }
    std::uint64_t unloaded_read_cycles() const override { return latency_; }

    std::uint32_t latency_cycles() const { return latency_; }
    double peak_bandwidth_gbps() const;

private:
    struct Channel {
        std::deque<MemRequest> inflight;  // ordered by done_dram_cycle
        std::uint64_t last_done = 0;
        bool any_done = false;
        std::uint32_t reads = 0;
        std::uint32_t writes = 0;
    };

    DramConfig cfg_;
    std::uint32_t latency_;
    std::uint64_t now_ = 0;
    std::vector<Channel> channels_;
};

enum class BackendKind { Ddr, Fixed };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view text);

std::unique_ptr<MemoryBackend> make_backend(BackendKind kind, const DramConfig& cfg,
                                            std::uint32_t fixed_latency_cycles);

}  // namespace memlens
