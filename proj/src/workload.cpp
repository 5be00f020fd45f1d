#include "memlens/workload.hpp"

#include <numeric>
#include <stdexcept>

namespace memlens {

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t s = seed;
    const auto a = splitmix64(s);
    s = a ^ (stream * 0xd1b54a32d192ed03ull);
    return splitmix64(s);
}

std::uint64_t Rng::below(std::uint64_t n)
{
    // Lemire's multiply-shift with rejection.
    u128 m = u128(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = -n % n;
        while (low < threshold) {
            m = u128(next()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

ChaseState build_chase(std::uint64_t region_lines, std::uint64_t seed, std::uint64_t base)
{
    if (region_lines < 2)
        throw std::invalid_argument("chase region needs at least two lines");
    if (region_lines > UINT32_MAX)
        throw std::invalid_argument("chase region too large");
    ChaseState s;
    s.base = base;
    s.perm.resize(region_lines);
    std::iota(s.perm.begin(), s.perm.end(), 0u);
    Rng rng(seed);
    for (std::uint64_t i = region_lines - 1; i > 0; --i)
        std::swap(s.perm[i], s.perm[rng.below(i)]);
    return s;
}

TrafficGen::TrafficGen(const TrafficParams& params, std::uint64_t seed) : p_(params), rng_(seed)
{
    if (p_.read_pct > 100)
        throw std::invalid_argument("read_pct outside 0..100");
    if (p_.region_lines == 0)
        throw std::invalid_argument("traffic region is empty");
}

std::optional<TrafficOp> TrafficGen::step(std::uint64_t cycle)
{
    if (cycle < next_ready_)
        return std::nullopt;
    next_ready_ = cycle + 1 + p_.pacing;
    TrafficOp op;
    op.line = p_.base + (p_.pattern == TrafficPattern::Unit ? seq_++ % p_.region_lines : rng_.below(p_.region_lines));
    op.is_write = !rng_.percent(p_.read_pct);
    return op;
}

}  // namespace memlens
