#pragma once

#include "memlens/dram_types.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace memlens {

struct Violation {
    std::string rule;  // e.g. "tRCD", "tFAW", "BankState"
    std::uint64_t cycle = 0;
    DramCoord coord;
};

/// Replays a command trace against the timing rules independently of the
/// scheduler that produced it. Throws std::invalid_argument when the trace is
/// not sorted by issue cycle.
std::vector<Violation> verify_command_trace(std::span<const Command> trace, const TimingParams& t);

// One line per command: cycle,kind,channel,rank,bank,row,col
void write_command_trace(std::ostream& out, std::span<const Command> trace);
std::vector<Command> read_command_trace(std::istream& in);

std::string format_violation(const Violation& v);

}  // namespace memlens
