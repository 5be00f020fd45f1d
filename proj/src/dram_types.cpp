#include "memlens/dram_types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace memlens {

void TimingParams::validate() const
{
    if (!(tCK_ps > 0.0))
        throw std::invalid_argument("tCK must be positive");
    if (tRAS < tRCD)
        throw std::invalid_argument("tRAS must be >= tRCD");
    if (tRC != tRAS + tRP)
        throw std::invalid_argument("tRC must equal tRAS + tRP");
    if (tBURST == 0)
        throw std::invalid_argument("tBURST must be positive");
    if (tCCD == 0)
        throw std::invalid_argument("tCCD must be positive");
    if (tREFI != 0 && tRFC >= tREFI)
        throw std::invalid_argument("tRFC must be shorter than tREFI");
}

std::uint32_t DramConfig::controller_delay_cycles() const
{
    return static_cast<std::uint32_t>(std::llround(controller_delay_ns * 1000.0 / timing.tCK_ps));
}

double DramConfig::peak_bandwidth_gbps() const
{
    const double transfers_per_s = 2.0 * 1e12 / timing.tCK_ps;
    return channels * transfers_per_s * 8.0 / 1e9;
}

void DramConfig::validate() const
{
    if (channels == 0 || dimms_per_channel == 0 || ranks_per_dimm == 0 || banks_per_rank == 0 ||
        rows_per_bank == 0 || columns_per_row == 0)
        throw std::invalid_argument("DRAM organization counts must be positive");
    if (line_bytes != 64)
        throw std::invalid_argument("line size must be 64 bytes");
    if (read_queue_depth == 0 || write_queue_depth == 0)
        throw std::invalid_argument("queue depths must be positive");
    if (!(write_drain_low < write_drain_high && write_drain_high <= write_queue_depth))
        throw std::invalid_argument("write drain watermarks must satisfy low < high <= wq_depth");
    if (controller_delay_ns < 0.0)
        throw std::invalid_argument("controller delay must be non-negative");
    timing.validate();
}

bool coord_in_range(const DramCoord& coord, const DramConfig& cfg)
{
    return coord.channel < cfg.channels && coord.rank < cfg.ranks() &&
           coord.bank < cfg.banks_per_rank && coord.row < cfg.rows_per_bank &&
           coord.column < cfg.columns_per_row;
}

std::string_view to_string(Origin origin)
{
    switch (origin) {
    case Origin::Demand:
        return "demand";
    case Origin::Prefetch:
        return "prefetch";
    case Origin::Writeback:
        return "writeback";
    }
    return "?";
}

std::string_view to_string(CommandKind kind)
{
    switch (kind) {
    case CommandKind::ACT:
        return "ACT";
    case CommandKind::PRE:
        return "PRE";
    case CommandKind::RD:
        return "RD";
    case CommandKind::WR:
        return "WR";
    case CommandKind::REF:
        return "REF";
    }
    return "?";
}

CommandKind parse_command_kind(std::string_view text)
{
    if (text == "ACT")
        return CommandKind::ACT;
    if (text == "PRE")
        return CommandKind::PRE;
    if (text == "RD")
        return CommandKind::RD;
    if (text == "WR")
        return CommandKind::WR;
    if (text == "REF")
        return CommandKind::REF;
    throw std::invalid_argument("unknown command kind '" + std::string(text) + "'");
}

}  // namespace memlens
