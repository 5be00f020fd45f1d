#include "memlens/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace memlens {

ConfigError::ConfigError(std::size_t line, const std::string& what)
    : std::invalid_argument(line ? fmt::format("line {}: {}", line, what) : what), line_(line), detail_(what)
{
}

ConfigError::ConfigError(const std::string& file, const ConfigError& inner)
    : std::invalid_argument(fmt::format("{}: {}", file, inner.what())), line_(inner.line_), detail_(inner.detail_)
{
}

namespace {

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line;
};

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T parse_int(const Entry& e)
{
    T v{};
    const auto* first = e.value.data();
    const auto* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ConfigError(e.line, fmt::format("{}: expected a non-negative integer, got '{}'", e.key, e.value));
    return v;
}

std::uint32_t u32(const Entry& e) { return parse_int<std::uint32_t>(e); }
std::uint64_t u64(const Entry& e) { return parse_int<std::uint64_t>(e); }

double real(const Entry& e)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos == e.value.size() && std::isfinite(v))
            return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(e.line, fmt::format("{}: expected a number, got '{}'", e.key, e.value));
}

bool boolean(const Entry& e)
{
    if (e.value == "true" || e.value == "1" || e.value == "on")
        return true;
    if (e.value == "false" || e.value == "0" || e.value == "off")
        return false;
    throw ConfigError(e.line, fmt::format("{}: expected true or false, got '{}'", e.key, e.value));
}

std::vector<std::string> list(const Entry& e)
{
    std::vector<std::string> out;
    std::stringstream ss(e.value);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto t = trim(item);
        if (t.empty())
            throw ConfigError(e.line, fmt::format("{}: empty list element", e.key));
        out.emplace_back(t);
    }
    return out;
}

std::vector<std::uint32_t> u32_list(const Entry& e)
{
    std::vector<std::uint32_t> out;
    for (const auto& item : list(e))
        out.push_back(u32(Entry{e.section, e.key, item, e.line}));
    return out;
}

template <typename F>
auto choice(const Entry& e, F parse) -> decltype(parse(std::string_view{}))
{
    try {
        return parse(e.value);
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(e.line, fmt::format("{}: {}", e.key, ex.what()));
    }
}

using Setter = std::function<void(PlatformConfig&, const Entry&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        // clock
        t["clock.cpu_freq_mhz"] = [](auto& p, auto& e) { p.clock.cpu_freq_mhz = real(e); };
        t["clock.mem_freq_mhz"] = [](auto& p, auto& e) { p.clock.mem_freq_mhz = real(e); };
        t["clock.clock_mode"] = [](auto& p, auto& e) { p.clock.mode = choice(e, parse_clock_mode); };
        // dram
        t["dram.channels"] = [](auto& p, auto& e) { p.dram.channels = u32(e); };
        t["dram.ranks_per_dimm"] = [](auto& p, auto& e) { p.dram.ranks_per_dimm = u32(e); };
        t["dram.dimms_per_channel"] = [](auto& p, auto& e) { p.dram.dimms_per_channel = u32(e); };
        t["dram.banks_per_rank"] = [](auto& p, auto& e) { p.dram.banks_per_rank = u32(e); };
        t["dram.rows_per_bank"] = [](auto& p, auto& e) { p.dram.rows_per_bank = u32(e); };
        t["dram.columns_per_row"] = [](auto& p, auto& e) { p.dram.columns_per_row = u32(e); };
        t["dram.rq_depth"] = [](auto& p, auto& e) { p.dram.read_queue_depth = u32(e); };
        t["dram.wq_depth"] = [](auto& p, auto& e) { p.dram.write_queue_depth = u32(e); };
        t["dram.wr_drain_high"] = [](auto& p, auto& e) { p.dram.write_drain_high = u32(e); };
        t["dram.wr_drain_low"] = [](auto& p, auto& e) { p.dram.write_drain_low = u32(e); };
        t["dram.controller_delay_ns"] = [](auto& p, auto& e) { p.dram.controller_delay_ns = real(e); };
        t["dram.backend"] = [](auto& p, auto& e) { p.backend = choice(e, parse_backend_kind); };
        t["dram.fixed_latency_cycles"] = [](auto& p, auto& e) { p.fixed_latency_cycles = u32(e); };
        // timing
        const std::pair<const char*, std::uint32_t TimingParams::*> timing[] = {
            {"t_cl", &TimingParams::tCL},     {"t_cwl", &TimingParams::tCWL},   {"t_rcd", &TimingParams::tRCD},
            {"t_rp", &TimingParams::tRP},     {"t_ras", &TimingParams::tRAS},   {"t_rc", &TimingParams::tRC},
            {"t_ccd", &TimingParams::tCCD},   {"t_rtp", &TimingParams::tRTP},   {"t_wr", &TimingParams::tWR},
            {"t_wtr", &TimingParams::tWTR},   {"t_rrd", &TimingParams::tRRD},   {"t_faw", &TimingParams::tFAW},
            {"t_refi", &TimingParams::tREFI}, {"t_rfc", &TimingParams::tRFC},   {"t_burst", &TimingParams::tBURST},
        };
        for (const auto& [name, member] : timing) {
            auto m = member;
            t[std::string("timing.") + name] = [m](auto& p, auto& e) { p.dram.timing.*m = u32(e); };
        }
        // hierarchy
        t["hierarchy.l1_kb"] = [](auto& p, auto& e) { p.hierarchy.caches.l1.size_bytes = u64(e) * 1024; };
        t["hierarchy.l1_ways"] = [](auto& p, auto& e) { p.hierarchy.caches.l1.ways = u32(e); };
        t["hierarchy.l1_lat"] = [](auto& p, auto& e) { p.hierarchy.caches.l1.latency = u32(e); };
        t["hierarchy.l2_kb"] = [](auto& p, auto& e) { p.hierarchy.caches.l2.size_bytes = u64(e) * 1024; };
        t["hierarchy.l2_ways"] = [](auto& p, auto& e) { p.hierarchy.caches.l2.ways = u32(e); };
        t["hierarchy.l2_lat"] = [](auto& p, auto& e) { p.hierarchy.caches.l2.latency = u32(e); };
        t["hierarchy.llc_mb"] = [](auto& p, auto& e) {
            const double mb = real(e);
            if (mb <= 0.0)
                throw ConfigError(e.line, "llc_mb must be positive");
            p.hierarchy.caches.llc.size_bytes = static_cast<std::uint64_t>(std::llround(mb * 1024 * 1024));
        };
        t["hierarchy.llc_ways"] = [](auto& p, auto& e) { p.hierarchy.caches.llc.ways = u32(e); };
        t["hierarchy.llc_lat"] = [](auto& p, auto& e) { p.hierarchy.caches.llc.latency = u32(e); };
        t["hierarchy.mshr"] = [](auto& p, auto& e) { p.hierarchy.caches.mshr_per_core = u32(e); };
        t["hierarchy.noc_mode"] = [](auto& p, auto& e) {
            if (e.value == "fixed")
                p.hierarchy.noc.mode = NocMode::FixedDelay;
            else if (e.value == "mesh")
                p.hierarchy.noc.mode = NocMode::Mesh;
            else
                throw ConfigError(e.line, fmt::format("noc_mode: expected fixed or mesh, got '{}'", e.value));
        };
        t["hierarchy.noc_fixed_ns"] = [](auto& p, auto& e) { p.hierarchy.noc.fixed_delay_ns = real(e); };
        t["hierarchy.noc_cols"] = [](auto& p, auto& e) { p.hierarchy.noc.mesh_cols = u32(e); };
        t["hierarchy.noc_rows"] = [](auto& p, auto& e) { p.hierarchy.noc.mesh_rows = u32(e); };
        t["hierarchy.noc_hop_cycles"] = [](auto& p, auto& e) { p.hierarchy.noc.per_hop_cycles = u32(e); };
        t["hierarchy.noc_base_cycles"] = [](auto& p, auto& e) { p.hierarchy.noc.base_cycles = u32(e); };
        t["hierarchy.pf_enable"] = [](auto& p, auto& e) { p.hierarchy.prefetch.enable = boolean(e); };
        t["hierarchy.pf_degree"] = [](auto& p, auto& e) { p.hierarchy.prefetch.degree = u32(e); };
        t["hierarchy.pf_distance"] = [](auto& p, auto& e) { p.hierarchy.prefetch.distance = u32(e); };
        t["hierarchy.pf_threshold"] = [](auto& p, auto& e) { p.hierarchy.prefetch.threshold = u32(e); };
        t["hierarchy.pf_table"] = [](auto& p, auto& e) { p.hierarchy.prefetch.table_entries = u32(e); };
        // engine
        t["engine.scale"] = [](auto&, auto&) {};  // applied before everything else
        t["engine.window_cycles"] = [](auto& p, auto& e) { p.engine.window_cycles = u32(e); };
        t["engine.imm_mode"] = [](auto& p, auto& e) {
            if (e.value == "fixed")
                p.engine.imm_mode = ImmMode::Fixed;
            else if (e.value == "controlled")
                p.engine.imm_mode = ImmMode::Controlled;
            else
                throw ConfigError(e.line, fmt::format("imm_mode: expected fixed or controlled, got '{}'", e.value));
        };
        t["engine.imm_fixed_cycles"] = [](auto& p, auto& e) { p.engine.imm_fixed_cycles = u32(e); };
        t["engine.imm_initial_ns"] = [](auto& p, auto& e) { p.engine.imm_initial_ns = real(e); };
        t["engine.warmup_windows"] = [](auto& p, auto& e) { p.engine.warmup_windows = u32(e); };
        t["engine.cores"] = [](auto& p, auto& e) { p.engine.cores = u32(e); };
        t["engine.weave_extension"] = [](auto& p, auto& e) {
            if (e.value == "none")
                p.engine.weave_extension = WeaveExtension::None;
            else if (e.value == "last_completion")
                p.engine.weave_extension = WeaveExtension::LastCompletion;
            else
                throw ConfigError(e.line,
                                  fmt::format("weave_extension: expected none or last_completion, got '{}'", e.value));
        };
        t["engine.traffic_pattern"] = [](auto& p, auto& e) {
            if (e.value == "random")
                p.engine.traffic_pattern = TrafficPattern::Random;
            else if (e.value == "unit")
                p.engine.traffic_pattern = TrafficPattern::Unit;
            else
                throw ConfigError(e.line, fmt::format("traffic_pattern: expected random or unit, got '{}'", e.value));
        };
        // sweep
        t["sweep.read_pcts"] = [](auto& p, auto& e) { p.sweep.read_pcts = u32_list(e); };
        t["sweep.pacing_levels"] = [](auto& p, auto& e) { p.sweep.pacing_levels = u32_list(e); };
        t["sweep.windows_per_point"] = [](auto& p, auto& e) { p.sweep.windows_per_point = u32(e); };
        t["sweep.seed"] = [](auto& p, auto& e) { p.sweep.seed = u64(e); };
        return t;
    }();
    return table;
}

Kernel parse_kernel(std::string_view s)
{
    if (s == "chase")
        return Kernel::Chase;
    if (s == "traffic")
        return Kernel::Traffic;
    throw std::invalid_argument(fmt::format("expected chase or traffic, got '{}'", s));
}

const std::set<std::string> kSections{"clock", "dram", "timing", "map", "hierarchy", "engine", "sweep"};

}  // namespace

PlatformConfig parse_config(std::string_view text, const std::filesystem::path& base_dir)
{
    std::vector<Entry> entries;
    std::map<std::string, std::size_t> where;  // "section.key" -> line
    std::string section;
    std::size_t line_no = 0;
    std::stringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        auto line = trim(std::string_view(raw).substr(0, raw.find('#')));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(line_no, "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!kSections.count(section))
                throw ConfigError(line_no, fmt::format("unknown section [{}]", section));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(line_no, "expected key = value");
        if (section.empty())
            throw ConfigError(line_no, "key outside of any section");
        Entry e{section, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
        if (e.key.empty())
            throw ConfigError(line_no, "empty key");
        const auto full = section + "." + e.key;
        if (where.count(full))
            throw ConfigError(line_no, fmt::format("duplicate key '{}' (first on line {})", e.key, where[full]));
        where[full] = line_no;
        entries.push_back(std::move(e));
    }
    const auto line_of = [&](std::initializer_list<const char*> keys) {
        std::size_t best = 0;
        for (const char* k : keys)
            if (auto it = where.find(k); it != where.end())
                best = std::max(best, it->second);
        return best;
    };

    PlatformConfig p = desk_platform();
    for (const auto& e : entries) {
        if (e.section == "engine" && e.key == "scale") {
            if (e.value == "desk")
                p = desk_platform();
            else if (e.value == "full")
                p = full_platform();
            else
                throw ConfigError(e.line, fmt::format("scale: expected desk or full, got '{}'", e.value));
        }
    }

    MappingScheme inline_scheme;
    bool has_inline_scheme = false;
    for (const auto& e : entries) {
        if (e.section == "map") {
            if (e.key == "kind") {
                if (e.value == "xor")
                    p.map.kind = MapKind::XorHash;
                else if (e.value == "field_order")
                    p.map.kind = MapKind::FieldOrder;
                else
                    throw ConfigError(e.line, fmt::format("kind: expected xor or field_order, got '{}'", e.value));
                inline_scheme.kind = p.map.kind;
            } else if (e.key == "scheme_file") {
                const auto path = base_dir.empty() ? std::filesystem::path(e.value) : base_dir / e.value;
                std::ifstream f(path);
                if (!f)
                    throw ConfigError(e.line, fmt::format("cannot open scheme file '{}'", path.string()));
                std::stringstream ss;
                ss << f.rdbuf();
                try {
                    p.map.scheme = parse_scheme(ss.str());
                } catch (const std::invalid_argument& ex) {
                    throw ConfigError(e.line, fmt::format("{}: {}", path.string(), ex.what()));
                }
            } else if (e.key == "order" || e.key == "channel_mod" || e.key.starts_with("xor.")) {
                try {
                    const auto one = parse_scheme(e.key + "=" + e.value);
                    if (e.key == "order")
                        inline_scheme.order = one.order;
                    else if (e.key == "channel_mod")
                        inline_scheme.channel_mod = one.channel_mod;
                    else
                        for (std::size_t f = 0; f < 3; ++f)
                            for (std::size_t b = 0; b < one.xor_bits[f].size(); ++b)
                                if (!one.xor_bits[f][b].empty()) {
                                    auto& dst = inline_scheme.xor_bits[f];
                                    if (dst.size() <= b)
                                        dst.resize(b + 1);
                                    dst[b] = one.xor_bits[f][b];
                                }
                } catch (const std::invalid_argument& ex) {
                    throw ConfigError(e.line, ex.what());
                }
                has_inline_scheme = true;
            } else {
                throw ConfigError(e.line, fmt::format("unknown key '{}' in [map]", e.key));
            }
            continue;
        }
        if (e.section == "engine" && e.key == "kernels") {
            p.engine.kernels.clear();
            for (const auto& k : list(e))
                p.engine.kernels.push_back(choice(Entry{e.section, e.key, k, e.line}, parse_kernel));
            continue;
        }
        const auto it = setters().find(e.section + "." + e.key);
        if (it == setters().end())
            throw ConfigError(e.line, fmt::format("unknown key '{}' in [{}]", e.key, e.section));
        it->second(p, e);
    }
    if (has_inline_scheme) {
        if (p.map.scheme)
            throw ConfigError(line_of({"map.scheme_file"}), "scheme_file and inline scheme keys are exclusive");
        p.map.scheme = inline_scheme;
    }

    auto& t = p.dram.timing;
    if (!where.count("timing.t_rc") && (where.count("timing.t_ras") || where.count("timing.t_rp")))
        t.tRC = t.tRAS + t.tRP;
    if (p.clock.mem_freq_mhz > 0.0)
        t.tCK_ps = 1e6 / p.clock.mem_freq_mhz;

    // Constraint checks that can be tied to a line.
    if (t.tRAS < t.tRCD)
        throw ConfigError(line_of({"timing.t_ras", "timing.t_rcd"}), "constraint violated: tRAS must be >= tRCD");
    if (t.tRC != t.tRAS + t.tRP)
        throw ConfigError(line_of({"timing.t_rc", "timing.t_ras", "timing.t_rp"}),
                          "constraint violated: tRC must equal tRAS + tRP");
    if (t.tREFI != 0 && t.tRFC >= t.tREFI)
        throw ConfigError(line_of({"timing.t_rfc", "timing.t_refi"}), "constraint violated: tRFC must be < tREFI");
    const auto& d = p.dram;
    if (!(d.write_drain_low < d.write_drain_high && d.write_drain_high <= d.write_queue_depth))
        throw ConfigError(line_of({"dram.wr_drain_low", "dram.wr_drain_high", "dram.wq_depth"}),
                          "constraint violated: wr_drain_low < wr_drain_high <= wq_depth");
    for (auto rp : p.sweep.read_pcts)
        if (rp > 100)
            throw ConfigError(line_of({"sweep.read_pcts"}), fmt::format("read_pct {} outside 0..100", rp));
    if (!p.engine.kernels.empty() && p.engine.kernels.size() != p.engine.cores)
        throw ConfigError(line_of({"engine.kernels", "engine.cores"}), "kernels must list one entry per core");

    try {
        p.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(0, ex.what());
    }
    return p;
}

PlatformConfig load_config(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError(0, fmt::format("cannot open config '{}'", path.string()));
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_config(ss.str(), path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string(), e);
    }
}

}  // namespace memlens
