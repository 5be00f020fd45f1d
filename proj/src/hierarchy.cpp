#include "memlens/hierarchy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memlens {

namespace {

constexpr std::uint64_t kLineBytes = 64;

void validate_level(const CacheLevelConfig& c, const char* name)
{
    if (c.size_bytes == 0 || c.ways == 0 || c.latency == 0)
        throw std::invalid_argument(fmt::format("{}: size, ways and latency must be positive", name));
    if (c.size_bytes % (std::uint64_t(c.ways) * kLineBytes) != 0)
        throw std::invalid_argument(fmt::format("{}: size must be divisible by ways x 64 B", name));
}

}  // namespace

void CacheConfig::validate() const
{
    validate_level(l1, "l1");
    validate_level(l2, "l2");
    validate_level(llc, "llc");
    if (mshr_per_core == 0)
        throw std::invalid_argument("mshr must be positive");
}

// ---------------------------------------------------------------------------

Cache::Cache(const CacheLevelConfig& cfg)
    : sets_(static_cast<std::uint32_t>(cfg.size_bytes / (std::uint64_t(cfg.ways) * kLineBytes))),
      ways_(cfg.ways),
      ways_data_(std::size_t(sets_) * ways_)
{
    validate_level(cfg, "cache");
}

Cache::Way* Cache::find(std::uint64_t line)
{
    return const_cast<Way*>(static_cast<const Cache*>(this)->find(line));
}

const Cache::Way* Cache::find(std::uint64_t line) const
{
    const Way* set = &ways_data_[std::size_t(line % sets_) * ways_];
    for (std::uint32_t w = 0; w < ways_; ++w)
        if (set[w].valid && set[w].line == line)
            return &set[w];
    return nullptr;
}

bool Cache::touch(std::uint64_t line)
{
    Way* way = find(line);
    if (!way)
        return false;
    way->stamp = ++clock_;
    return true;
}

bool Cache::dirty(std::uint64_t line) const
{
    const Way* way = find(line);
    return way && way->dirty;
}

void Cache::set_dirty(std::uint64_t line, bool dirty)
{
    if (Way* way = find(line))
        way->dirty = dirty;
}

std::uint64_t Cache::ready_cycle(std::uint64_t line) const
{
    const Way* way = find(line);
    return way ? way->ready : 0;
}

std::optional<Cache::Victim> Cache::insert(std::uint64_t line, bool dirty, std::uint64_t ready_cycle)
{
    Way* set = &ways_data_[std::size_t(line % sets_) * ways_];
    Way* slot = nullptr;
    for (std::uint32_t w = 0; w < ways_ && !slot; ++w)
        if (!set[w].valid)
            slot = &set[w];
    std::optional<Victim> victim;
    if (!slot) {
        slot = std::min_element(set, set + ways_, [](const Way& a, const Way& b) { return a.stamp < b.stamp; });
        victim = Victim{slot->line, slot->dirty};
    }
    *slot = Way{line, ++clock_, ready_cycle, true, dirty};
    return victim;
}

std::uint64_t Cache::dirty_lines() const
{
    return std::uint64_t(
        std::count_if(ways_data_.begin(), ways_data_.end(), [](const Way& w) { return w.valid && w.dirty; }));
}

// ---------------------------------------------------------------------------

void NocConfig::validate(std::uint32_t cores) const
{
    if (fixed_delay_ns < 0.0)
        throw std::invalid_argument("noc_fixed_ns must be non-negative");
    if (mode == NocMode::Mesh) {
        if (mesh_cols == 0 || mesh_rows == 0)
            throw std::invalid_argument("mesh must have at least one tile");
        for (const auto& [x, y] : core_tile)
            if (x >= mesh_cols || y >= mesh_rows)
                throw std::invalid_argument(fmt::format("core tile ({},{}) outside the mesh", x, y));
        if (!core_tile.empty() && core_tile.size() < cores)
            throw std::invalid_argument("core_tile must list every core");
    }
}

NocModel::NocModel(NocConfig cfg, double cpu_freq_hz)
    : cfg_(std::move(cfg)),
      fixed_cycles_(static_cast<std::uint32_t>(std::llround(cfg_.fixed_delay_ns * cpu_freq_hz / 1e9)))
{
}

std::pair<std::uint32_t, std::uint32_t> NocModel::slice_tile(std::uint64_t line) const
{
    const auto tiles = std::uint64_t(cfg_.mesh_cols) * cfg_.mesh_rows;
    const auto t = static_cast<std::uint32_t>(line % tiles);
    return {t % cfg_.mesh_cols, t / cfg_.mesh_cols};
}

std::pair<std::uint32_t, std::uint32_t> NocModel::core_tile(std::uint32_t core) const
{
    if (!cfg_.core_tile.empty())
        return cfg_.core_tile.at(core);
    const auto t = core % (cfg_.mesh_cols * cfg_.mesh_rows);
    return {t % cfg_.mesh_cols, t / cfg_.mesh_cols};
}

std::uint32_t NocModel::tile_latency(std::pair<std::uint32_t, std::uint32_t> a,
                                     std::pair<std::uint32_t, std::uint32_t> b) const
{
    const auto dx = a.first > b.first ? a.first - b.first : b.first - a.first;
    const auto dy = a.second > b.second ? a.second - b.second : b.second - a.second;
    return cfg_.base_cycles + 2 * (dx + dy) * cfg_.per_hop_cycles;
}

std::uint32_t NocModel::latency(std::uint32_t core, std::uint64_t line) const
{
    if (cfg_.mode == NocMode::FixedDelay)
        return fixed_cycles_;
    return tile_latency(core_tile(core), slice_tile(line));
}

// ---------------------------------------------------------------------------

StridePrefetcher::StridePrefetcher(const PrefetchConfig& cfg) : cfg_(cfg)
{
    if (cfg_.table_entries == 0)
        throw std::invalid_argument("prefetch table needs at least one entry");
    if (cfg_.threshold > 3)
        throw std::invalid_argument("pf_threshold must be within 0..3");
    table_.reserve(cfg_.table_entries);
}

std::vector<std::uint64_t> StridePrefetcher::observe(std::uint64_t pc, std::uint64_t line)
{
    ++clock_;
    auto it = std::find_if(table_.begin(), table_.end(), [&](const Entry& e) { return e.pc == pc; });
    if (it == table_.end()) {
        Entry fresh{pc, line, 0, 0, false, clock_};
        if (table_.size() < cfg_.table_entries)
            table_.push_back(fresh);
        else
            *std::min_element(table_.begin(), table_.end(),
                              [](const Entry& a, const Entry& b) { return a.stamp < b.stamp; }) = fresh;
        return {};
    }

    Entry& e = *it;
    e.stamp = clock_;
    const auto delta = static_cast<std::int64_t>(line - e.last);
    if (delta == 0)
        return {};
    if (!e.trained) {
        e.stride = delta;
        e.confidence = 1;
        e.trained = true;
    } else if (delta == e.stride) {
        e.confidence = static_cast<std::uint8_t>(std::min(3, e.confidence + 1));
    } else {
        e.stride = delta;
        e.confidence = 0;
    }
    e.last = line;

    std::vector<std::uint64_t> out;
    if (e.confidence < cfg_.threshold)
        return out;
    for (std::uint32_t k = 0; k < cfg_.degree; ++k) {
        const auto target = static_cast<std::int64_t>(line) + std::int64_t(cfg_.distance + k) * e.stride;
        if (target >= 0)
            out.push_back(static_cast<std::uint64_t>(target));
    }
    return out;
}

// ---------------------------------------------------------------------------

bool MshrFile::available(std::uint64_t cycle)
{
    std::erase_if(busy_, [&](std::uint64_t r) { return r <= cycle; });
    return busy_.size() < capacity_;
}

std::uint64_t MshrFile::next_release() const
{
    return busy_.empty() ? 0 : *std::min_element(busy_.begin(), busy_.end());
}

void MshrFile::shift(std::uint64_t delta)
{
    for (auto& r : busy_)
        r += delta;
}

// ---------------------------------------------------------------------------

Hierarchy::Hierarchy(const CacheConfig& caches, const NocConfig& noc, const PrefetchConfig& pf, std::uint32_t cores,
                     double cpu_freq_hz, std::uint64_t capacity_lines)
    : cfg_(caches), pf_cfg_(pf), noc_(noc, cpu_freq_hz), capacity_lines_(capacity_lines), llc_(caches.llc)
{
    cfg_.validate();
    noc.validate(cores);
    if (cores == 0)
        throw std::invalid_argument("at least one core is required");
    for (std::uint32_t c = 0; c < cores; ++c) {
        l1_.emplace_back(cfg_.l1);
        l2_.emplace_back(cfg_.l2);
        prefetchers_.emplace_back(pf_cfg_);
        pf_slots_.emplace_back(std::max(1u, cfg_.mshr_per_core / 2));
    }
}

Cache& Hierarchy::level(int index, std::uint32_t core)
{
    return index == 0 ? l1_[core] : index == 1 ? l2_[core] : llc_;
}

std::uint32_t Hierarchy::miss_latency(std::uint32_t core, std::uint64_t line) const
{
    return cfg_.l1.latency + cfg_.l2.latency + cfg_.llc.latency + noc_.latency(core, line);
}

void Hierarchy::evict_into(int index, std::uint32_t core, const Cache::Victim& v, std::vector<MemOp>& emitted)
{
    if (index > 2) {
        ++stats_.writebacks;
        emitted.push_back({v.line, true, Origin::Writeback, miss_latency(core, v.line)});
        return;
    }
    Cache& target = level(index, core);
    if (target.contains(v.line)) {
        target.set_dirty(v.line, true);
        return;
    }
    if (auto next = target.insert(v.line, true, 0); next && next->dirty)
        evict_into(index + 1, core, *next, emitted);
}

void Hierarchy::fill(int index, std::uint32_t core, std::uint64_t line, bool dirty, std::uint64_t ready,
                     std::vector<MemOp>& emitted)
{
    if (auto victim = level(index, core).insert(line, dirty, ready); victim && victim->dirty)
        evict_into(index + 1, core, *victim, emitted);
}

AccessResult Hierarchy::access(std::uint32_t core, std::uint64_t line, bool is_write, std::uint64_t pc,
                               std::uint64_t cycle, std::uint32_t mem_cycles, std::vector<MemOp>& emitted)
{
    ++stats_.accesses;
    Cache& l1 = l1_[core];
    Cache& l2 = l2_[core];
    const auto wait = [&](std::uint32_t lat, std::uint64_t ready) {
        return ready > cycle + lat ? static_cast<std::uint32_t>(ready - cycle) : lat;
    };

    AccessResult res;
    if (l1.touch(line)) {
        ++stats_.hits[0];
        res = {1, wait(cfg_.l1.latency, l1.ready_cycle(line))};
        if (is_write && !l1.dirty(line)) {
            ++stats_.lines_dirtied;
            l1.set_dirty(line, true);
        }
        return res;
    }

    std::vector<std::uint64_t> targets;
    if (pf_cfg_.enable)
        targets = prefetchers_[core].observe(pc, line);

    bool moved_dirty = false;
    const std::uint32_t lat2 = cfg_.l1.latency + cfg_.l2.latency;
    if (l2.touch(line)) {
        ++stats_.hits[1];
        const auto ready = l2.ready_cycle(line);
        moved_dirty = l2.dirty(line);
        l2.set_dirty(line, false);
        res = {2, wait(lat2, ready)};
        fill(0, core, line, moved_dirty, ready, emitted);
    } else {
        const std::uint32_t lat3 = lat2 + cfg_.llc.latency + noc_.latency(core, line);
        if (llc_.touch(line)) {
            ++stats_.hits[2];
            const auto ready = llc_.ready_cycle(line);
            moved_dirty = llc_.dirty(line);
            llc_.set_dirty(line, false);
            res = {3, wait(lat3, ready)};
            fill(1, core, line, false, ready, emitted);
            fill(0, core, line, moved_dirty, ready, emitted);
        } else {
            ++stats_.misses;
            const auto ready = cycle + lat3 + mem_cycles;
            res = {4, lat3};
            fill(2, core, line, false, ready, emitted);
            fill(1, core, line, false, ready, emitted);
            fill(0, core, line, false, ready, emitted);
        }
    }
    if (is_write && !moved_dirty) {
        ++stats_.lines_dirtied;
        l1.set_dirty(line, true);
    }

    for (auto t : targets)
        prefetch(core, t, cycle, mem_cycles, emitted);
    return res;
}

void Hierarchy::prefetch(std::uint32_t core, std::uint64_t line, std::uint64_t cycle, std::uint32_t mem_cycles,
                         std::vector<MemOp>& emitted)
{
    if (line >= capacity_lines_ || l1_[core].contains(line) || l2_[core].contains(line))
        return;
    const auto lat = miss_latency(core, line);
    if (llc_.touch(line)) {
        const bool dirty = llc_.dirty(line);
        llc_.set_dirty(line, false);
        fill(1, core, line, dirty, std::max(llc_.ready_cycle(line), cycle + lat), emitted);
        return;
    }
    auto& slots = pf_slots_[core];
    if (!slots.available(cycle)) {
        ++stats_.prefetches_dropped;
        return;
    }
    const auto ready = cycle + lat + mem_cycles;
    slots.allocate(ready);
    ++stats_.prefetches_issued;
    fill(2, core, line, false, ready, emitted);
    fill(1, core, line, false, ready, emitted);
    emitted.push_back({line, false, Origin::Prefetch, lat});
}

std::uint64_t Hierarchy::dirty_lines() const
{
    std::uint64_t n = llc_.dirty_lines();
    for (const auto& c : l1_)
        n += c.dirty_lines();
    for (const auto& c : l2_)
        n += c.dirty_lines();
    return n;
}

}  // namespace memlens
