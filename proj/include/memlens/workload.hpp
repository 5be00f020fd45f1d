#pragma once

#include "memlens/platform.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace memlens {

std::uint64_t splitmix64(std::uint64_t& state);
// Independent stream seed for (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// 64-bit Mersenne Twister with a library-independent bounded mapping, so
/// streams are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }
    // Uniform in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);
    bool percent(std::uint32_t pct) { return below(100) < pct; }

private:
    std::mt19937_64 eng_;
};

/// A single-cycle successor permutation over a region of lines.
struct ChaseState {
    std::uint64_t base = 0;
    std::vector<std::uint32_t> perm;
    std::uint32_t cursor = 0;

    std::uint64_t region_lines() const { return perm.size(); }
    // Returns the line to load and advances the cursor.
    std::uint64_t next()
    {
        const std::uint64_t line = base + cursor;
        cursor = perm[cursor];
        return line;
    }
};

// Sattolo's algorithm. Throws std::invalid_argument for fewer than two lines.
ChaseState build_chase(std::uint64_t region_lines, std::uint64_t seed, std::uint64_t base = 0);

struct TrafficOp {
    std::uint64_t line;
    bool is_write;
};

struct TrafficParams {
    std::uint32_t read_pct = 100;
    std::uint32_t pacing = 0;  // idle cycles between consecutive ops
    TrafficPattern pattern = TrafficPattern::Random;
    std::uint64_t base = 0;
    std::uint64_t region_lines = 1;
};

/// Paced memory-op source for one traffic core.
class TrafficGen {
public:
    TrafficGen(const TrafficParams& params, std::uint64_t seed);

    // An op if the pacing gap has elapsed at `cycle`, else nothing.
    std::optional<TrafficOp> step(std::uint64_t cycle);
    std::uint64_t next_ready() const { return next_ready_; }
    void shift(std::uint64_t delta) { next_ready_ += delta; }
    const TrafficParams& params() const { return p_; }

private:
    TrafficParams p_;
    Rng rng_;
    std::uint64_t next_ready_ = 0;
    std::uint64_t seq_ = 0;
};

}  // namespace memlens
