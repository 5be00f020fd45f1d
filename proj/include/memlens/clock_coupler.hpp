#pragma once

#include <cstdint>
#include <string_view>

namespace memlens {

// Simulated time is kept in integral attoseconds so that periods such as
// 1/2.1 GHz accumulate without drift over millions of cycles.
using Attoseconds = std::uint64_t;

inline constexpr double kAttosPerPs = 1e6;
inline constexpr double kAttosPerNs = 1e9;

enum class ClockMode {
    Disabled,      // one memory tick per CPU cycle
    CeilRatio,     // tick every ceil(f_cpu / f_mem) CPU cycles
    PsAccumulator  // tick while CPU time is ahead of memory time
};

enum class Domain { Cpu, Dram };

std::string_view to_string(ClockMode mode);
ClockMode parse_clock_mode(std::string_view text);

Attoseconds period_from_hz(double freq_hz);

/// Couples the CPU and memory clock domains.
///
/// Each call to advance() consumes exactly one CPU cycle and reports how many
/// memory ticks the caller must deliver to the memory model during that cycle.
/// The three modes differ only in that tick count; the CPU-side counters are
/// identical for all of them.
class ClockCoupler {
public:
    ClockCoupler(double cpu_freq_hz, double mem_freq_hz, ClockMode mode);

    std::uint64_t advance();

    double wall_time_ns(Domain domain) const;

    ClockMode mode() const { return mode_; }
    double cpu_freq_hz() const { return cpu_freq_hz_; }
    double mem_freq_hz() const { return mem_freq_hz_; }

    Attoseconds cpu_period_as() const { return cpu_period_; }
    Attoseconds dram_period_as() const { return dram_period_; }
    double cpu_period_ns() const { return static_cast<double>(cpu_period_) / kAttosPerNs; }
    double dram_period_ns() const { return static_cast<double>(dram_period_) / kAttosPerNs; }

    Attoseconds cpu_time_as() const { return cpu_time_; }
    Attoseconds dram_time_as() const { return dram_time_; }
    std::uint64_t cur_cycle() const { return cur_cycle_; }
    std::uint64_t dram_cycle() const { return dram_cycle_; }
    std::uint64_t tick_counter() const { return tick_counter_; }
    std::uint64_t freq_ratio() const { return freq_ratio_; }

    // Signed difference between the exact period and the stored integral one.
    double cpu_period_rounding_as() const { return cpu_rounding_; }
    double dram_period_rounding_as() const { return dram_rounding_; }

private:
    double cpu_freq_hz_;
    double mem_freq_hz_;
    ClockMode mode_;

    Attoseconds cpu_period_;
    Attoseconds dram_period_;
    double cpu_rounding_;
    double dram_rounding_;

    Attoseconds cpu_time_ = 0;
    Attoseconds dram_time_ = 0;
    std::uint64_t cur_cycle_ = 0;
    std::uint64_t dram_cycle_ = 0;

    std::uint64_t tick_counter_ = 0;
    std::uint64_t freq_ratio_;
};

}  // namespace memlens
