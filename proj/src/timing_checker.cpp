#include "memlens/timing_checker.hpp"

#include <fmt/format.h>

#include <deque>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace memlens {

namespace {

struct BankHistory {
    std::optional<std::uint32_t> open_row;
    std::optional<std::uint64_t> last_act, last_pre, last_rd, last_wr;
};

struct RankHistory {
    std::deque<std::uint64_t> acts;
    std::optional<std::uint64_t> last_ref, last_pre;
};

struct ChannelHistory {
    std::optional<std::uint64_t> last_rd, last_wr, last_cmd;
};

using BankKey = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;
using RankKey = std::pair<std::uint32_t, std::uint32_t>;

// True when `earlier` exists and the gap to `now` is below `min_gap`.
bool too_close(const std::optional<std::uint64_t>& earlier, std::uint64_t now, std::uint64_t min_gap)
{
    return earlier && now - *earlier < min_gap;
}

}  // namespace

std::vector<Violation> verify_command_trace(std::span<const Command> trace, const TimingParams& t)
{
    std::vector<Violation> out;
    std::map<BankKey, BankHistory> banks;
    std::map<RankKey, RankHistory> ranks;
    std::map<std::uint32_t, ChannelHistory> channels;

    std::uint64_t prev_cycle = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& cmd = trace[i];
        const auto now = cmd.issue_cycle;
        if (i > 0 && now < prev_cycle)
            throw std::invalid_argument(fmt::format("command trace not sorted: entry {} at cycle {} follows cycle {}",
                                                    i, now, prev_cycle));
        prev_cycle = now;

        const auto& c = cmd.coord;
        auto& ch = channels[c.channel];
        auto& rk = ranks[{c.channel, c.rank}];
        auto& bk = banks[{c.channel, c.rank, c.bank}];
        const auto flag = [&](const char* rule) { out.push_back({rule, now, c}); };

        if (ch.last_cmd && *ch.last_cmd == now)
            flag("CommandBus");
        ch.last_cmd = now;
        if (too_close(rk.last_ref, now, t.tRFC))
            flag("tRFC");

        switch (cmd.kind) {
        case CommandKind::ACT:
            if (bk.open_row)
                flag("BankState");
            if (too_close(bk.last_pre, now, t.tRP))
                flag("tRP");
            if (too_close(bk.last_act, now, t.tRC))
                flag("tRC");
            if (!rk.acts.empty() && now - rk.acts.back() < t.tRRD)
                flag("tRRD");
            if (rk.acts.size() >= 4 && now - rk.acts[rk.acts.size() - 4] < t.tFAW)
                flag("tFAW");
            rk.acts.push_back(now);
            if (rk.acts.size() > 4)
                rk.acts.pop_front();
            bk.open_row = c.row;
            bk.last_act = now;
            break;

        case CommandKind::PRE:
            if (!bk.open_row)
                flag("BankState");
            if (too_close(bk.last_act, now, t.tRAS))
                flag("tRAS");
            if (too_close(bk.last_rd, now, t.tRTP))
                flag("tRTP");
            if (too_close(bk.last_wr, now, t.write_to_precharge()))
                flag("tWR");
            bk.open_row.reset();
            bk.last_pre = now;
            rk.last_pre = now;
            break;

        case CommandKind::RD:
        case CommandKind::WR: {
            const bool rd = cmd.kind == CommandKind::RD;
            if (bk.open_row != c.row)
                flag("BankState");
            if (too_close(bk.last_act, now, t.tRCD))
                flag("tRCD");
            if (too_close(rd ? ch.last_rd : ch.last_wr, now, t.tCCD))
                flag("tCCD");
            if (rd && too_close(ch.last_wr, now, t.write_to_read()))
                flag("tWTR");
            if (!rd && too_close(ch.last_rd, now, t.read_to_write()))
                flag("tRTW");
            (rd ? bk.last_rd : bk.last_wr) = now;
            (rd ? ch.last_rd : ch.last_wr) = now;
            break;
        }

        case CommandKind::REF: {
            for (auto it = banks.lower_bound({c.channel, c.rank, 0});
                 it != banks.end() && std::get<0>(it->first) == c.channel && std::get<1>(it->first) == c.rank; ++it) {
                if (it->second.open_row) {
                    flag("BankState");
                    break;
                }
            }
            if (too_close(rk.last_pre, now, t.tRP))
                flag("tRP");
            rk.last_ref = now;
            break;
        }
        }
    }
    return out;
}

void write_command_trace(std::ostream& out, std::span<const Command> trace)
{
    for (const auto& cmd : trace) {
        const auto& c = cmd.coord;
        out << fmt::format("{},{},{},{},{},{},{}\n", cmd.issue_cycle, to_string(cmd.kind), c.channel, c.rank, c.bank,
                           c.row, c.column);
    }
}

std::vector<Command> read_command_trace(std::istream& in)
{
    std::vector<Command> trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');)
            fields.push_back(f);
        if (fields.size() != 7)
            throw std::invalid_argument(fmt::format("trace line {}: expected 7 fields, got {}", line_no, fields.size()));
        try {
            Command cmd;
            cmd.issue_cycle = std::stoull(fields[0]);
            cmd.kind = parse_command_kind(fields[1]);
            cmd.coord.channel = static_cast<std::uint32_t>(std::stoul(fields[2]));
            cmd.coord.rank = static_cast<std::uint32_t>(std::stoul(fields[3]));
            cmd.coord.bank = static_cast<std::uint32_t>(std::stoul(fields[4]));
            cmd.coord.row = static_cast<std::uint32_t>(std::stoul(fields[5]));
            cmd.coord.column = static_cast<std::uint32_t>(std::stoul(fields[6]));
            trace.push_back(cmd);
        } catch (const std::logic_error& e) {
            throw std::invalid_argument(fmt::format("trace line {}: {}", line_no, e.what()));
        }
    }
    return trace;
}

std::string format_violation(const Violation& v)
{
    const auto& c = v.coord;
    return fmt::format("{} at cycle {} (ch {} rank {} bank {} row {})", v.rule, v.cycle, c.channel, c.rank, c.bank,
                       c.row);
}

}  // namespace memlens
