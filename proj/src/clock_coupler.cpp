#include "memlens/clock_coupler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace memlens {

std::string_view to_string(ClockMode mode)
{
    switch (mode) {
    case ClockMode::Disabled:
        return "disabled";
    case ClockMode::CeilRatio:
        return "ceil";
    case ClockMode::PsAccumulator:
        return "ps";
    }
    return "?";
}

ClockMode parse_clock_mode(std::string_view text)
{
    if (text == "disabled")
        return ClockMode::Disabled;
    if (text == "ceil")
        return ClockMode::CeilRatio;
    if (text == "ps")
        return ClockMode::PsAccumulator;
    throw std::invalid_argument("unknown clock mode '" + std::string(text) + "'");
}

Attoseconds period_from_hz(double freq_hz)
{
    if (!(freq_hz > 0.0) || !std::isfinite(freq_hz))
        throw std::invalid_argument("clock frequency must be positive");
    const double period = 1e18 / freq_hz;
    if (period < 1.0 || period > 1e15)
        throw std::invalid_argument("clock frequency out of supported range");
    return static_cast<Attoseconds>(std::llround(period));
}

namespace {

// ceil(f_cpu / f_mem), tolerant of the last-ulp error in the division.
std::uint64_t ceil_ratio(double cpu_hz, double mem_hz)
{
    const double r = cpu_hz / mem_hz;
    const double nearest = std::round(r);
    if (std::abs(r - nearest) <= 1e-9 * r)
        return static_cast<std::uint64_t>(std::max(1.0, nearest));
    return static_cast<std::uint64_t>(std::max(1.0, std::ceil(r)));
}

}  // namespace

ClockCoupler::ClockCoupler(double cpu_freq_hz, double mem_freq_hz, ClockMode mode)
    : cpu_freq_hz_(cpu_freq_hz),
      mem_freq_hz_(mem_freq_hz),
      mode_(mode),
      cpu_period_(period_from_hz(cpu_freq_hz)),
      dram_period_(period_from_hz(mem_freq_hz)),
      cpu_rounding_(1e18 / cpu_freq_hz - static_cast<double>(cpu_period_)),
      dram_rounding_(1e18 / mem_freq_hz - static_cast<double>(dram_period_)),
      freq_ratio_(ceil_ratio(cpu_freq_hz, mem_freq_hz))
{
}

std::uint64_t ClockCoupler::advance()
{
    ++cur_cycle_;
    cpu_time_ += cpu_period_;

    std::uint64_t ticks = 0;
    switch (mode_) {
    case ClockMode::Disabled:
        ticks = 1;
        break;
    case ClockMode::CeilRatio:
        ticks = (tick_counter_ % freq_ratio_ == 0) ? 1 : 0;
        ++tick_counter_;
        break;
    case ClockMode::PsAccumulator:
        while (cpu_time_ > dram_time_ + ticks * dram_period_)
            ++ticks;
        break;
    }
    dram_cycle_ += ticks;
    dram_time_ += ticks * dram_period_;
    return ticks;
}

double ClockCoupler::wall_time_ns(Domain domain) const
{
    if (domain == Domain::Cpu)
        return static_cast<double>(cur_cycle_) * static_cast<double>(cpu_period_) / kAttosPerNs;
    return static_cast<double>(dram_cycle_) * static_cast<double>(dram_period_) / kAttosPerNs;
}

}  // namespace memlens
