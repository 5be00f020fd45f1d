#pragma once

#include "memlens/dram_types.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace memlens {

struct CacheLevelConfig {
    std::uint64_t size_bytes = 0;
    std::uint32_t ways = 1;
    std::uint32_t latency = 1;  // CPU cycles
};

struct CacheConfig {
    CacheLevelConfig l1{32 * 1024, 8, 4};
    CacheLevelConfig l2{1024 * 1024, 16, 14};
    CacheLevelConfig llc{2 * 1024 * 1024, 16, 31};
    std::uint32_t mshr_per_core = 16;

    void validate() const;
};

/// Set-associative, LRU, write-back cache of 64-byte lines.
class Cache {
public:
    struct Victim {
        std::uint64_t line;
        bool dirty;
    };

    explicit Cache(const CacheLevelConfig& cfg);

    // Returns true on hit and refreshes LRU state.
    bool touch(std::uint64_t line);
    bool contains(std::uint64_t line) const { return find(line) != nullptr; }
    bool dirty(std::uint64_t line) const;
    void set_dirty(std::uint64_t line, bool dirty);
    // Cycle at which the line's data is present (in-flight fills).
    std::uint64_t ready_cycle(std::uint64_t line) const;

    // Inserts a line that is not present; returns the evicted line, if any.
    std::optional<Victim> insert(std::uint64_t line, bool dirty, std::uint64_t ready_cycle);

    std::uint64_t dirty_lines() const;
    std::uint32_t sets() const { return sets_; }
    std::uint32_t ways() const { return ways_; }

private:
    struct Way {
        std::uint64_t line = 0;
        std::uint64_t stamp = 0;
        std::uint64_t ready = 0;
        bool valid = false;
        bool dirty = false;
    };

    Way* find(std::uint64_t line);
    const Way* find(std::uint64_t line) const;

    std::uint32_t sets_;
    std::uint32_t ways_;
    std::uint64_t clock_ = 0;
    std::vector<Way> ways_data_;
};

enum class NocMode { FixedDelay, Mesh };

struct NocConfig {
    NocMode mode = NocMode::FixedDelay;
    double fixed_delay_ns = 0.0;
    std::uint32_t mesh_cols = 4;
    std::uint32_t mesh_rows = 4;
    std::uint32_t per_hop_cycles = 2;
    std::uint32_t base_cycles = 4;
    // Empty means core i sits on tile i (row-major).
    std::vector<std::pair<std::uint32_t, std::uint32_t>> core_tile;

    void validate(std::uint32_t cores) const;
};

/// Pure-latency model of the path between a core and an LLC slice.
class NocModel {
public:
    NocModel(NocConfig cfg, double cpu_freq_hz);

    // Round-trip cycles added to any access that reaches the LLC.
    std::uint32_t latency(std::uint32_t core, std::uint64_t line) const;
    std::uint32_t tile_latency(std::pair<std::uint32_t, std::uint32_t> a,
                               std::pair<std::uint32_t, std::uint32_t> b) const;
    std::pair<std::uint32_t, std::uint32_t> slice_tile(std::uint64_t line) const;
    std::pair<std::uint32_t, std::uint32_t> core_tile(std::uint32_t core) const;
    std::uint32_t fixed_cycles() const { return fixed_cycles_; }

private:
    NocConfig cfg_;
    std::uint32_t fixed_cycles_;
};

struct PrefetchConfig {
    bool enable = false;
    std::uint32_t degree = 2;
    std::uint32_t distance = 1;
    std::uint32_t threshold = 2;
    std::uint32_t table_entries = 64;
};

/// Per-PC stride detector with 2-bit confidence.
class StridePrefetcher {
public:
    explicit StridePrefetcher(const PrefetchConfig& cfg);

    // Trains on one access and returns the lines to prefetch, if any.
    std::vector<std::uint64_t> observe(std::uint64_t pc, std::uint64_t line);

private:
    struct Entry {
        std::uint64_t pc = 0;
        std::uint64_t last = 0;
        std::int64_t stride = 0;
        std::uint8_t confidence = 0;
        bool trained = false;  // a stride has been observed
        std::uint64_t stamp = 0;
    };

    PrefetchConfig cfg_;
    std::vector<Entry> table_;
    std::uint64_t clock_ = 0;
};

/// Outstanding-miss slots, each held until a known release cycle.
class MshrFile {
public:
    explicit MshrFile(std::uint32_t capacity) : capacity_(capacity) {}

    bool available(std::uint64_t cycle);
    void allocate(std::uint64_t release_cycle) { busy_.push_back(release_cycle); }
    // Earliest cycle at which a slot frees; only valid when full.
    std::uint64_t next_release() const;
    std::size_t in_use() const { return busy_.size(); }
    std::uint32_t capacity() const { return capacity_; }
    // Moves every release cycle by `delta` (window extension).
    void shift(std::uint64_t delta);

private:
    std::uint32_t capacity_;
    std::vector<std::uint64_t> busy_;
};

/// A memory-bound operation produced by the hierarchy besides the demand miss.
struct MemOp {
    std::uint64_t line;
    bool is_write;
    Origin origin;
    std::uint32_t latency;  // CPU cycles from the access to the memory interface
};

struct AccessResult {
    int level = 1;  // 1..3 = hit level, 4 = memory
    std::uint32_t latency = 0;
    bool miss() const { return level == 4; }
};

struct HierarchyStats {
    std::uint64_t accesses = 0;
    std::uint64_t hits[3] = {0, 0, 0};
    std::uint64_t misses = 0;
    std::uint64_t prefetches_issued = 0;
    std::uint64_t prefetches_dropped = 0;
    std::uint64_t writebacks = 0;
    std::uint64_t lines_dirtied = 0;
};

/// Private L1/L2 per core, one shared LLC, optional stride prefetch into L2.
///
/// Non-inclusive. Only one level holds a line dirty: a fill moves dirtiness
/// to the level being filled. Caches are filled at access time and record
/// when the data arrives, so later hits to an in-flight line wait for it.
class Hierarchy {
public:
    Hierarchy(const CacheConfig& caches, const NocConfig& noc, const PrefetchConfig& pf, std::uint32_t cores,
              double cpu_freq_hz, std::uint64_t capacity_lines);

    // On a miss the caller sends a demand read to memory that arrives after
    // `latency` cycles; `mem_cycles` is the expected memory latency used to
    // time fills. Prefetches and writebacks are appended to `emitted`.
    AccessResult access(std::uint32_t core, std::uint64_t line, bool is_write, std::uint64_t pc, std::uint64_t cycle,
                        std::uint32_t mem_cycles, std::vector<MemOp>& emitted);

    // Hierarchy latency of a miss from `core` to `line`.
    std::uint32_t miss_latency(std::uint32_t core, std::uint64_t line) const;

    MshrFile& prefetch_slots(std::uint32_t core) { return pf_slots_[core]; }
    std::uint64_t dirty_lines() const;
    const HierarchyStats& stats() const { return stats_; }
    const NocModel& noc() const { return noc_; }
    const CacheConfig& config() const { return cfg_; }

private:
    Cache& level(int index, std::uint32_t core);
    void fill(int index, std::uint32_t core, std::uint64_t line, bool dirty, std::uint64_t ready,
              std::vector<MemOp>& emitted);
    void evict_into(int index, std::uint32_t core, const Cache::Victim& v, std::vector<MemOp>& emitted);
    void prefetch(std::uint32_t core, std::uint64_t line, std::uint64_t cycle, std::uint32_t mem_cycles,
                  std::vector<MemOp>& emitted);

    CacheConfig cfg_;
    PrefetchConfig pf_cfg_;
    NocModel noc_;
    std::uint64_t capacity_lines_;
    std::vector<Cache> l1_;
    std::vector<Cache> l2_;
    Cache llc_;
    std::vector<StridePrefetcher> prefetchers_;
    std::vector<MshrFile> pf_slots_;
    HierarchyStats stats_;
};

}  // namespace memlens
