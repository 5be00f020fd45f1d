#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace memlens {

/// JEDEC-style timing constraints, all in memory clock cycles except tCK_ps.
struct TimingParams {
    double tCK_ps = 750.0;
    std::uint32_t tCL = 19;
    std::uint32_t tCWL = 14;
    std::uint32_t tRCD = 19;
    std::uint32_t tRP = 19;
    std::uint32_t tRAS = 43;
    std::uint32_t tRC = 62;
    std::uint32_t tCCD = 4;
    std::uint32_t tRTP = 10;
    std::uint32_t tWR = 20;
    std::uint32_t tWTR = 4;
    std::uint32_t tRRD = 6;
    std::uint32_t tFAW = 28;
    std::uint32_t tREFI = 10400;
    std::uint32_t tRFC = 467;
    std::uint32_t tBURST = 4;

    // Minimum RD -> WR spacing on one channel so the data bursts do not
    // collide (one idle cycle for bus turnaround).
    std::uint32_t read_to_write() const
    {
        const std::int64_t gap = std::int64_t(tCL) + tBURST + 2 - tCWL;
        return gap > 1 ? static_cast<std::uint32_t>(gap) : 1u;
    }
    std::uint32_t write_to_read() const { return tCWL + tBURST + tWTR; }
    std::uint32_t write_to_precharge() const { return tCWL + tBURST + tWR; }

    // Throws std::invalid_argument naming the first broken invariant.
    void validate() const;
};

struct DramConfig {
    std::uint32_t channels = 2;
    std::uint32_t dimms_per_channel = 1;
    std::uint32_t ranks_per_dimm = 2;
    std::uint32_t banks_per_rank = 16;
    std::uint32_t rows_per_bank = 32768;
    std::uint32_t columns_per_row = 128;  // in cache lines
    std::uint32_t line_bytes = 64;
    std::uint32_t read_queue_depth = 32;
    std::uint32_t write_queue_depth = 32;
    std::uint32_t write_drain_high = 24;
    std::uint32_t write_drain_low = 8;
    double controller_delay_ns = 0.0;
    TimingParams timing;

    std::uint32_t ranks() const { return dimms_per_channel * ranks_per_dimm; }
    std::uint32_t banks_per_channel() const { return ranks() * banks_per_rank; }
    std::uint64_t capacity_lines() const
    {
        return std::uint64_t(channels) * ranks() * banks_per_rank * rows_per_bank *
               columns_per_row;
    }
    std::uint32_t controller_delay_cycles() const;
    // Peak data-bus bandwidth: two transfers per clock of 8 bytes each.
    double peak_bandwidth_gbps() const;

    void validate() const;
};

struct DramCoord {
    std::uint32_t channel = 0;
    std::uint32_t rank = 0;
    std::uint32_t bank = 0;
    std::uint32_t row = 0;
    std::uint32_t column = 0;

    auto operator<=>(const DramCoord&) const = default;
};

bool coord_in_range(const DramCoord& coord, const DramConfig& cfg);

enum class Origin : std::uint8_t { Demand, Prefetch, Writeback };

std::string_view to_string(Origin origin);

inline constexpr std::uint64_t kNoCycle = ~std::uint64_t(0);

/// A cache-line memory transaction. CPU-domain stamps are taken at the
/// CPU-memory interface; DRAM-domain stamps by the memory backend.
struct MemRequest {
    std::uint64_t id = 0;
    std::uint64_t line_addr = 0;
    bool is_write = false;
    Origin origin = Origin::Demand;
    DramCoord coord;
    int core = -1;
    std::uint64_t window = 0;

    std::uint64_t arrive_cpu_cycle = kNoCycle;  // handed to the interface
    std::uint64_t enq_cpu_cycle = kNoCycle;     // accepted by the controller
    std::uint64_t done_cpu_cycle = kNoCycle;
    std::uint64_t enq_dram_cycle = kNoCycle;
    std::uint64_t done_dram_cycle = kNoCycle;
    bool forwarded = false;
};

enum class CommandKind : std::uint8_t { ACT, PRE, RD, WR, REF };

inline constexpr std::size_t kCommandKinds = 5;

std::string_view to_string(CommandKind kind);
CommandKind parse_command_kind(std::string_view text);

struct Command {
    CommandKind kind = CommandKind::ACT;
    DramCoord coord;
    std::uint64_t issue_cycle = 0;

    bool operator==(const Command&) const = default;
};

}  // namespace memlens
